//! Structured grids on the cross-section: a pole-free latitude/longitude grid
//! on S^2 with spectral differentiation, and a flat periodic chart used as a
//! zero-curvature oracle.
//!
//! Sphere layout: `n_lat` midpoint colatitudes `theta_i = (i + 1/2) pi / n_lat`
//! (never touching a pole) times `n_lon` uniform longitudes. A smooth field on
//! the sphere extends to the doubled torus `theta in [0, 2pi)` through the pole
//! identification `(theta, phi) ~ (2pi - theta, phi + pi)`; components of
//! smooth tensors pick up the sign `(-1)^{#theta indices}` under that map.
//! Band-limited fields extend to exact trigonometric polynomials, so periodic
//! spectral differentiation on the doubled grid is exact to round-off.
//!
//! Quadrature in colatitude uses cosine-moment weights exact for integrands
//! `cos(k theta) sin(theta)` up to `k = n_lat - 1`.

use thiserror::Error;

/// Sign of a tensor-component function under the pole-crossing identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Parity of a component with the given number of theta indices.
    pub fn from_theta_count(n: usize) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimensions must be positive and even in longitude, got {nlat} x {nlon}")]
    BadDimensions { nlat: usize, nlon: usize },
    #[error("field length {got} does not match grid node count {want}")]
    LengthMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Sphere,
    /// Flat periodic chart of side lengths (l1, l2).
    Torus {
        l1: f64,
        l2: f64,
    },
}

/// A structured 2-d chart with spectral derivative operators and quadrature.
#[derive(Debug, Clone)]
pub struct Grid {
    kind: Kind,
    pub n1: usize,
    pub n2: usize,
    coord1: Vec<f64>,
    coord2: Vec<f64>,
    /// Per-node weight for the reference measure (sphere: round area element).
    quad_w: Vec<f64>,
    /// Density of the reference measure against d(coord1) d(coord2).
    ref_density: Vec<f64>,
    /// Periodic differentiation matrix in direction 1 (doubled for the sphere).
    d1: Vec<f64>,
    d1_n: usize,
    /// Periodic differentiation matrix in direction 2.
    d2: Vec<f64>,
}

fn periodic_diff_matrix(n: usize, period: f64) -> Vec<f64> {
    // Uniform-grid spectral differentiation; exact for trig polynomials of
    // degree < n/2. Entries 0.5 (-1)^{j-k} cot((j-k) h pi / period ... ) in
    // the 2pi normalization, rescaled to the requested period.
    assert!(n % 2 == 0, "even point count required");
    let mut d = vec![0.0; n * n];
    let scale = 2.0 * std::f64::consts::PI / period;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let m = j as isize - k as isize;
                let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
                let arg = std::f64::consts::PI * (m as f64) / (n as f64);
                d[j * n + k] = scale * 0.5 * sgn / arg.tan();
            }
        }
    }
    d
}

impl Grid {
    /// Pole-free sphere grid, `n_lat` Gauss-type colatitude rows by `n_lon`
    /// uniform longitudes. `n_lon` must be even so the pole identification
    /// maps grid columns to grid columns.
    pub fn sphere(n_lat: usize, n_lon: usize) -> Result<Grid, GridError> {
        if n_lat < 4 || n_lon < 4 || n_lon % 2 != 0 || n_lat % 2 != 0 {
            return Err(GridError::BadDimensions {
                nlat: n_lat,
                nlon: n_lon,
            });
        }
        let pi = std::f64::consts::PI;
        let h = pi / n_lat as f64;
        let theta: Vec<f64> = (0..n_lat).map(|i| (i as f64 + 0.5) * h).collect();
        let phi: Vec<f64> = (0..n_lon)
            .map(|j| 2.0 * pi * j as f64 / n_lon as f64)
            .collect();

        // Colatitude weights: w_i = (1/N) [b_0 + 2 sum_{k even >= 2} b_k cos(k theta_i)]
        // with b_k = int_0^pi cos(k theta) sin(theta) dtheta.
        let n = n_lat;
        let mut wlat = vec![0.0; n];
        for (i, &t) in theta.iter().enumerate() {
            let mut acc = 2.0; // b_0
            let mut k = 2;
            while k < n {
                let bk = -2.0 / ((k * k - 1) as f64);
                acc += 2.0 * bk * ((k as f64) * t).cos();
                k += 2;
            }
            wlat[i] = acc / n as f64;
        }

        let dphi_cell = 2.0 * pi / n_lon as f64;
        let mut quad_w = vec![0.0; n_lat * n_lon];
        let mut ref_density = vec![0.0; n_lat * n_lon];
        for i in 0..n_lat {
            for j in 0..n_lon {
                quad_w[i * n_lon + j] = wlat[i] * dphi_cell;
                ref_density[i * n_lon + j] = theta[i].sin();
            }
        }

        Ok(Grid {
            kind: Kind::Sphere,
            n1: n_lat,
            n2: n_lon,
            coord1: theta,
            coord2: phi,
            quad_w,
            ref_density,
            d1: periodic_diff_matrix(2 * n_lat, 2.0 * pi),
            d1_n: 2 * n_lat,
            d2: periodic_diff_matrix(n_lon, 2.0 * pi),
        })
    }

    /// Flat periodic chart `[0,l1) x [0,l2)`; reference measure is d x d y.
    pub fn torus(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Grid, GridError> {
        if n1 < 4 || n2 < 4 || n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(GridError::BadDimensions { nlat: n1, nlon: n2 });
        }
        let x: Vec<f64> = (0..n1).map(|i| l1 * i as f64 / n1 as f64).collect();
        let y: Vec<f64> = (0..n2).map(|j| l2 * j as f64 / n2 as f64).collect();
        let cell = (l1 / n1 as f64) * (l2 / n2 as f64);
        Ok(Grid {
            kind: Kind::Torus { l1, l2 },
            n1,
            n2,
            coord1: x,
            coord2: y,
            quad_w: vec![cell; n1 * n2],
            ref_density: vec![1.0; n1 * n2],
            d1: periodic_diff_matrix(n1, l1),
            d1_n: n1,
            d2: periodic_diff_matrix(n2, l2),
        })
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == Kind::Sphere
    }

    pub fn n_nodes(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    /// Chart coordinates of every node, row-major in coord1.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for &a in &self.coord1 {
            for &b in &self.coord2 {
                out.push((a, b));
            }
        }
        out
    }

    pub fn coord1(&self) -> &[f64] {
        &self.coord1
    }

    pub fn coord2(&self) -> &[f64] {
        &self.coord2
    }

    /// Reference-measure quadrature weights (sphere: round area element, so
    /// they sum to 4 pi).
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_w
    }

    pub fn ref_density(&self) -> &[f64] {
        &self.ref_density
    }

    fn check_len(&self, f: &[f64]) -> Result<(), GridError> {
        if f.len() != self.n_nodes() {
            return Err(GridError::LengthMismatch {
                got: f.len(),
                want: self.n_nodes(),
            });
        }
        Ok(())
    }

    /// Integral of a nodal function against the reference measure.
    pub fn integrate_ref(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.quad_w.iter().zip(f) {
            acc += w * v;
        }
        acc
    }

    /// Partial derivative along coordinate 1 (colatitude on the sphere).
    /// `parity` is the pole parity of the input field; ignored on the torus.
    pub fn d1(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        self.check_len(f).expect("d1 field length");
        match self.kind {
            Kind::Torus { .. } => {
                let n1 = self.n1;
                let n2 = self.n2;
                let mut out = vec![0.0; f.len()];
                for j in 0..n2 {
                    for i in 0..n1 {
                        let mut acc = 0.0;
                        for k in 0..n1 {
                            acc += self.d1[i * n1 + k] * f[k * n2 + j];
                        }
                        out[i * n2 + j] = acc;
                    }
                }
                out
            }
            Kind::Sphere => {
                let n1 = self.n1;
                let n2 = self.n2;
                let m = self.d1_n; // 2 n1
                let half = n2 / 2;
                let sgn = parity.sign();
                // Extended column values: rows n1..2n1 mirror with phi shift.
                let mut out = vec![0.0; f.len()];
                let mut col = vec![0.0; m];
                for j in 0..n2 {
                    let js = (j + half) % n2;
                    for i in 0..n1 {
                        col[i] = f[i * n2 + j];
                        col[n1 + i] = sgn * f[(n1 - 1 - i) * n2 + js];
                    }
                    for i in 0..n1 {
                        let mut acc = 0.0;
                        let row = &self.d1[i * m..(i + 1) * m];
                        for k in 0..m {
                            acc += row[k] * col[k];
                        }
                        out[i * n2 + j] = acc;
                    }
                }
                out
            }
        }
    }

    /// Partial derivative along coordinate 2 (longitude on the sphere).
    pub fn d2(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f).expect("d2 field length");
        let n1 = self.n1;
        let n2 = self.n2;
        let mut out = vec![0.0; f.len()];
        for i in 0..n1 {
            let base = i * n2;
            for j in 0..n2 {
                let mut acc = 0.0;
                let row = &self.d2[j * n2..(j + 1) * n2];
                for k in 0..n2 {
                    acc += row[k] * f[base + k];
                }
                out[base + j] = acc;
            }
        }
        out
    }

    /// Derivative along coordinate `a` (0 or 1) with the input's parity.
    pub fn deriv(&self, a: usize, f: &[f64], parity: Parity) -> Vec<f64> {
        match a {
            0 => self.d1(f, parity),
            1 => self.d2(f),
            _ => panic!("chart direction out of range"),
        }
    }

    /// Colatitude derivative of a tensor component with `theta_count` theta
    /// indices and `phi_count` phi indices.
    ///
    /// Covariant components carry a structural factor sin^{phi_count}(theta);
    /// differentiating the raw component injects equator-scale round-off into
    /// the small near-pole rows, which downstream inverse-metric factors then
    /// amplify. The component is therefore divided by sin^{phi_count}(theta)
    /// (smooth on the extended torus, parity flipped per power), spectrally
    /// differentiated, and the product rule applied exactly.
    pub fn d1_comp(&self, f: &[f64], theta_count: usize, phi_count: usize) -> Vec<f64> {
        let parity = Parity::from_theta_count(theta_count);
        if !self.is_sphere() || phi_count == 0 {
            return self.d1(f, parity);
        }
        let k = phi_count as i32;
        let n = self.n_nodes();
        let n2 = self.n2;
        let mut scaled = vec![0.0; n];
        for i1 in 0..self.n1 {
            let s = self.coord1[i1].sin().powi(k);
            for j in 0..n2 {
                scaled[i1 * n2 + j] = f[i1 * n2 + j] / s;
            }
        }
        let scaled_parity = if phi_count % 2 == 0 { parity } else { parity.flip() };
        let ds = self.d1(&scaled, scaled_parity);
        let mut out = vec![0.0; n];
        for i1 in 0..self.n1 {
            let t = self.coord1[i1];
            let sk = t.sin().powi(k);
            let skm1 = t.sin().powi(k - 1);
            for j in 0..n2 {
                let idx = i1 * n2 + j;
                out[idx] = sk * ds[idx] + (k as f64) * skm1 * t.cos() * scaled[idx];
            }
        }
        out
    }
}
