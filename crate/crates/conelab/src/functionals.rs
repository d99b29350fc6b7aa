//! Weighted functionals on pairs (g, w): the cubic weight integral A, the
//! weighted total scalar curvature B, the constraint functional A1, their
//! combination R = (A - B/(n-2)) / (2-n), analytic gradients with respect to
//! the fixed background inner product, the constraint projection, and the
//! renormalized exponential chart onto the constraint level set.
//!
//! Tangent convention: a pair (h, v) is tangent to the path
//! `(g + t h, w e^{t v})`; every finite-difference oracle uses that path.

use crate::fields::{MetricField, ScalarField, SymTensorField, WeightField};
use crate::geometry::{
    self, hessian, integrate, laplacian, ricci, scalar_curvature, trace, GeometryError,
};
use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("dimension n = {0} rejected: the combination divides by n - 2")]
    BadDimension(usize),
    #[error("pair outside the neighborhood guard: {0}")]
    GuardViolation(String),
    #[error("perturbed metric degenerate: {0}")]
    DegenerateMetric(String),
    #[error("background cross-section is not Einstein with constant n-2: residual {0:.3e}")]
    NotEinstein(f64),
    #[error("background base pair violates the weighted volume constraint: residual {0:.3e}")]
    BaseNotNormalized(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] crate::fields::FieldError),
}

/// A point of the configuration space: a metric and a positive weight.
#[derive(Debug, Clone)]
pub struct WeightedPair {
    pub g: MetricField,
    pub w: WeightField,
}

/// A tangent direction (h, v) for the path (g + t h, w e^{t v}).
#[derive(Debug, Clone)]
pub struct TangentPair {
    pub h: SymTensorField,
    pub v: ScalarField,
}

impl TangentPair {
    pub fn zeros(n: usize) -> TangentPair {
        TangentPair {
            h: SymTensorField::zeros(n),
            v: ScalarField::zeros(n),
        }
    }

    pub fn scale(&self, c: f64) -> TangentPair {
        TangentPair {
            h: self.h.scale(c),
            v: self.v.scale(c),
        }
    }

    pub fn add(&self, o: &TangentPair) -> TangentPair {
        TangentPair {
            h: self.h.add(&o.h),
            v: self.v.add(&o.v),
        }
    }

    pub fn sub(&self, o: &TangentPair) -> TangentPair {
        TangentPair {
            h: self.h.sub(&o.h),
            v: self.v.sub(&o.v),
        }
    }

    pub fn axpy(&self, c: f64, o: &TangentPair) -> TangentPair {
        TangentPair {
            h: self.h.axpy(c, &o.h),
            v: ScalarField {
                vals: self
                    .v
                    .vals
                    .iter()
                    .zip(&o.v.vals)
                    .map(|(a, b)| a + c * b)
                    .collect(),
            },
        }
    }
}

/// Fixed background data: the unit Einstein round metric g0, the constant
/// b_inf, and the base pair (b_inf^{-2} g0, b_inf). On the exact round
/// cross-section the weighted volume constraint pins b_inf to
/// (vol(N)/vol(S^{n-1}))^{1/(n-2)} = 1; the constant is kept symbolic in all
/// formulas and general values are exercised on the radial cone models.
#[derive(Debug, Clone)]
pub struct BackgroundData {
    pub grid: Grid,
    /// Ambient dimension; the cross-section has dimension n - 1.
    pub n: usize,
    pub b_inf: f64,
    pub g0: MetricField,
    /// Background metric b_inf^{-2} g0.
    pub gbar: MetricField,
}

impl BackgroundData {
    pub fn new(grid: Grid, n: usize, b_inf: f64) -> Result<BackgroundData, FunctionalError> {
        if n < 3 {
            return Err(FunctionalError::BadDimension(n));
        }
        let g0 = geometry::round_sphere_metric(&grid, 1.0)?;
        let ric = ricci(&grid, &g0);
        let target = g0.comp.scale((n - 2) as f64);
        let resid = ric.sub(&target).max_abs();
        if resid > 1e-8 {
            return Err(FunctionalError::NotEinstein(resid));
        }
        let gbar = MetricField::new(&grid, g0.comp.scale(1.0 / (b_inf * b_inf)))?;
        let bg = BackgroundData { grid, n, b_inf, g0, gbar };
        let base = bg.base_pair();
        let a1 = eval_a1(&bg, &base);
        let rel = (a1 - bg.vol_target()).abs() / bg.vol_target();
        if rel > 1e-10 {
            return Err(FunctionalError::BaseNotNormalized(rel));
        }
        Ok(bg)
    }

    /// The base pair (b_inf^{-2} g0, b_inf).
    pub fn base_pair(&self) -> WeightedPair {
        WeightedPair {
            g: self.gbar.clone(),
            w: WeightField::constant(self.grid.n_nodes(), self.b_inf).unwrap(),
        }
    }

    /// Area of the unit sphere in ambient dimension n (the constraint value).
    pub fn vol_target(&self) -> f64 {
        sphere_area(self.n)
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }
}

/// Area of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    // 2 pi^{n/2} / Gamma(n/2), for the low dimensions used here.
    let pi = std::f64::consts::PI;
    match n {
        2 => 2.0 * pi,
        3 => 4.0 * pi,
        4 => 2.0 * pi * pi,
        5 => 8.0 * pi * pi / 3.0,
        _ => {
            let mut gamma = if n % 2 == 0 { 1.0 } else { pi.sqrt() };
            let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
            while x < n as f64 / 2.0 - 0.5 {
                gamma *= x;
                x += 1.0;
            }
            2.0 * pi.powf(n as f64 / 2.0) / gamma
        }
    }
}

/// Neighborhood guard: pointwise metric eigenvalues above half the background
/// and weight within 50% of b_inf. Operations refuse rather than extrapolate.
pub fn guard_check(bg: &BackgroundData, p: &WeightedPair) -> Result<(), FunctionalError> {
    let floor = 0.5 * bg.gbar.min_eig_global();
    let me = p.g.min_eig_global();
    if me <= floor {
        return Err(FunctionalError::GuardViolation(format!(
            "metric min eigenvalue {me:.3e} below half the background ({floor:.3e})"
        )));
    }
    for (k, w) in p.w.vals.iter().enumerate() {
        if (w / bg.b_inf - 1.0).abs() >= 0.5 {
            return Err(FunctionalError::GuardViolation(format!(
                "weight at node {k} is {w:.3}, more than 50% from b_inf"
            )));
        }
    }
    Ok(())
}

/// A(g, w) = int w^3 dmu_g.
pub fn eval_a(bg: &BackgroundData, p: &WeightedPair) -> f64 {
    let w3 = ScalarField {
        vals: p.w.vals.iter().map(|w| w * w * w).collect(),
    };
    integrate(&bg.grid, &w3, &p.g)
}

/// B(g, w) = int R_g w dmu_g.
pub fn eval_b(bg: &BackgroundData, p: &WeightedPair) -> f64 {
    let r = scalar_curvature(&bg.grid, &p.g);
    integrate(&bg.grid, &r.mul(&p.w.as_scalar()), &p.g)
}

/// A1(g, w) = int w dmu_g.
pub fn eval_a1(bg: &BackgroundData, p: &WeightedPair) -> f64 {
    integrate(&bg.grid, &p.w.as_scalar(), &p.g)
}

/// R(g, w) = (A - B/(n-2)) / (2-n).
pub fn eval_r(bg: &BackgroundData, p: &WeightedPair) -> f64 {
    let nm2 = (bg.n - 2) as f64;
    (eval_a(bg, p) - eval_b(bg, p) / nm2) / (2.0 - bg.n as f64)
}

/// Relative residual of the weighted volume constraint.
pub fn a1_residual(bg: &BackgroundData, p: &WeightedPair) -> f64 {
    (eval_a1(bg, p) - bg.vol_target()).abs() / bg.vol_target()
}

/// Tangency residual of (h, v) at (g, w): int (Tr(h)/2 + v) w dmu_g.
pub fn tangency_residual(bg: &BackgroundData, p: &WeightedPair, x: &TangentPair) -> f64 {
    let tr = trace(&p.g, &x.h);
    let integrand = ScalarField {
        vals: tr
            .vals
            .iter()
            .zip(&x.v.vals)
            .zip(&p.w.vals)
            .map(|((t, v), w)| (0.5 * t + v) * w)
            .collect(),
    };
    integrate(&bg.grid, &integrand, &p.g)
}

/// The metric-transport map: [Psi(J)]_{ij} = gbar_{ik} g^{kn} J_{nm} g^{ml} gbar_{lj},
/// so that <h, J>_g = <h, Psi(J)>_gbar pointwise.
pub fn psi_map(g: &MetricField, j: &SymTensorField, gbar: &MetricField) -> SymTensorField {
    let n = g.len();
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let gb = gbar.comp.mat(node);
        let jm = j.mat(node);
        // M = ginv * J * ginv, then gbar * M * gbar
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        acc += ginv[a][p] * jm[p][q] * ginv[q][b];
                    }
                }
                m[a][b] = acc;
            }
        }
        for i in 0..2 {
            for jdx in i..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += gb[i][a] * m[a][b] * gb[b][jdx];
                    }
                }
                out.vals[node][crate::fields::sym_idx(i, jdx)] = acc;
            }
        }
    }
    out
}

/// The density nu = w sqrt(det g) / (b_inf sqrt(det gbar)).
pub fn density_nu(bg: &BackgroundData, p: &WeightedPair) -> ScalarField {
    let n = p.g.len();
    let mut vals = vec![0.0; n];
    for k in 0..n {
        vals[k] = p.w.vals[k] * p.g.sqrt_det(k) / (bg.b_inf * bg.gbar.sqrt_det(k));
    }
    ScalarField { vals }
}

/// Gradient of R at (g, w) with respect to the fixed background inner
/// product: (2-n) grad R = (phi1/2 Psi(g) + Psi(J), phi1) nu with
/// phi1 = 3 w^2 - R_g/(n-2), J = J1 + J2,
/// J1 = Ric/(n-2) - w^2 g, J2 = ((Lap w / w) g - Hess w / w)/(n-2).
pub fn grad_r(bg: &BackgroundData, p: &WeightedPair) -> Result<TangentPair, FunctionalError> {
    guard_check(bg, p)?;
    let grid = &bg.grid;
    let n = p.g.len();
    let nm2 = (bg.n - 2) as f64;
    let rg = scalar_curvature(grid, &p.g);
    let ric = ricci(grid, &p.g);
    let wfield = p.w.as_scalar();
    let hw = hessian(grid, &p.g, &wfield);
    let lw = laplacian(grid, &p.g, &wfield);
    let nu = density_nu(bg, p);

    let mut j = SymTensorField::zeros(n);
    let mut phi1 = vec![0.0; n];
    for k in 0..n {
        let w = p.w.vals[k];
        phi1[k] = 3.0 * w * w - rg.vals[k] / nm2;
        let gk = p.g.comp.vals[k];
        for c in 0..3 {
            let j1 = ric.vals[k][c] / nm2 - w * w * gk[c];
            let j2 = (lw.vals[k] / w * gk[c] - hw.vals[k][c] / w) / nm2;
            j.vals[k][c] = j1 + j2;
        }
    }
    let psi_j = psi_map(&p.g, &j, &bg.gbar);
    let psi_g = psi_map(&p.g, &p.g.comp, &bg.gbar);
    let scale = 1.0 / (2.0 - bg.n as f64);
    let mut h = SymTensorField::zeros(n);
    let mut v = vec![0.0; n];
    for k in 0..n {
        for c in 0..3 {
            h.vals[k][c] = scale * nu.vals[k] * (0.5 * phi1[k] * psi_g.vals[k][c] + psi_j.vals[k][c]);
        }
        v[k] = scale * nu.vals[k] * phi1[k];
    }
    Ok(TangentPair { h, v: ScalarField { vals: v } })
}

/// Gradient of A1: (Psi(g)/2, 1) nu.
pub fn grad_a1(bg: &BackgroundData, p: &WeightedPair) -> Result<TangentPair, FunctionalError> {
    guard_check(bg, p)?;
    let nu = density_nu(bg, p);
    let psi_g = psi_map(&p.g, &p.g.comp, &bg.gbar);
    let h = psi_g.scale(0.5).mul_scalar_field(&nu);
    Ok(TangentPair { h, v: nu })
}

/// Fixed base-point inner product of tangent pairs:
/// int (<h1, h2>_gbar + v1 v2) b_inf dmu_gbar.
pub fn l2_inner(bg: &BackgroundData, x: &TangentPair, y: &TangentPair) -> f64 {
    let hh = geometry::inner_sym2(&bg.gbar, &x.h, &y.h);
    let integrand = ScalarField {
        vals: hh
            .vals
            .iter()
            .zip(x.v.vals.iter().zip(&y.v.vals))
            .map(|(t, (a, b))| t + a * b)
            .collect(),
    };
    bg.b_inf * integrate(&bg.grid, &integrand, &bg.gbar)
}

pub fn l2_norm(bg: &BackgroundData, x: &TangentPair) -> f64 {
    l2_inner(bg, x, x).sqrt()
}

/// Orthogonal projection of x against the direction y (removes the y-component).
pub fn project_out(bg: &BackgroundData, x: &TangentPair, y: &TangentPair) -> TangentPair {
    let yy = l2_inner(bg, y, y);
    if yy == 0.0 {
        return x.clone();
    }
    let xy = l2_inner(bg, x, y);
    x.axpy(-xy / yy, y)
}

/// The constrained gradient: grad R minus its component along grad A1.
pub fn project_gradient(bg: &BackgroundData, p: &WeightedPair) -> Result<TangentPair, FunctionalError> {
    let gr = grad_r(bg, p)?;
    let ga = grad_a1(bg, p)?;
    let ga_norm2 = l2_inner(bg, &ga, &ga);
    if ga_norm2 <= 0.0 {
        return Err(FunctionalError::GuardViolation(
            "constraint gradient vanished".into(),
        ));
    }
    Ok(project_out(bg, &gr, &ga))
}

/// Renormalized exponential chart: x = (h, w) maps to
/// (gbar + h, [target/A1] b_inf e^w), which satisfies the constraint exactly.
pub fn exp_chart(bg: &BackgroundData, x: &TangentPair) -> Result<WeightedPair, FunctionalError> {
    let comp = bg.gbar.comp.add(&x.h);
    let g = MetricField::new(&bg.grid, comp)
        .map_err(|e| FunctionalError::DegenerateMetric(format!("{e}")))?;
    let w_raw: Vec<f64> = x.v.vals.iter().map(|v| bg.b_inf * v.exp()).collect();
    let w_raw = WeightField::new(w_raw).map_err(|e| FunctionalError::DegenerateMetric(format!("{e}")))?;
    let pair_raw = WeightedPair { g: g.clone(), w: w_raw };
    let a1 = eval_a1(bg, &pair_raw);
    let c = bg.vol_target() / a1;
    let w = WeightField::new(pair_raw.w.vals.iter().map(|v| c * v).collect())
        .map_err(|e| FunctionalError::DegenerateMetric(format!("{e}")))?;
    Ok(WeightedPair { g, w })
}

/// First variation of A along (h, v): int {w^2 (Tr h / 2 + v) + 2 w^2 v} w dmu_g.
pub fn first_variation_a(bg: &BackgroundData, p: &WeightedPair, x: &TangentPair) -> f64 {
    let tr = trace(&p.g, &x.h);
    let integrand = ScalarField {
        vals: tr
            .vals
            .iter()
            .zip(x.v.vals.iter().zip(&p.w.vals))
            .map(|(t, (v, w))| {
                let w2 = w * w;
                (w2 * (0.5 * t + v) + 2.0 * w2 * v) * w
            })
            .collect(),
    };
    integrate(&bg.grid, &integrand, &p.g)
}

/// First variation of B along (h, v):
/// int {-<Ric, h> + <h, Hess w>/w - Tr(h) (Lap w)/w + R (Tr h / 2 + v)} w dmu_g.
pub fn first_variation_b(bg: &BackgroundData, p: &WeightedPair, x: &TangentPair) -> f64 {
    let grid = &bg.grid;
    let ric = ricci(grid, &p.g);
    let rg = scalar_curvature(grid, &p.g);
    let wfield = p.w.as_scalar();
    let hw = hessian(grid, &p.g, &wfield);
    let lw = laplacian(grid, &p.g, &wfield);
    let tr = trace(&p.g, &x.h);
    let ric_h = geometry::inner_sym2(&p.g, &ric, &x.h);
    let h_hw = geometry::inner_sym2(&p.g, &x.h, &hw);
    let n = p.g.len();
    let mut vals = vec![0.0; n];
    for k in 0..n {
        let w = p.w.vals[k];
        vals[k] = (-ric_h.vals[k] + h_hw.vals[k] / w - tr.vals[k] * lw.vals[k] / w
            + rg.vals[k] * (0.5 * tr.vals[k] + x.v.vals[k]))
            * w;
    }
    integrate(grid, &ScalarField { vals }, &p.g)
}

/// First variation of R along (h, v), from the A and B variations.
pub fn first_variation_r(bg: &BackgroundData, p: &WeightedPair, x: &TangentPair) -> f64 {
    let nm2 = (bg.n - 2) as f64;
    (first_variation_a(bg, p, x) - first_variation_b(bg, p, x) / nm2) / (2.0 - bg.n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::harmonics::{self, harmonic};
    use crate::rng::Rng;

    fn background() -> BackgroundData {
        BackgroundData::new(Grid::sphere(24, 48).unwrap(), 3, 1.0).unwrap()
    }

    /// Band-limited tangent direction from seeded harmonic coefficients.
    pub fn random_tangent(bg: &BackgroundData, rng: &mut Rng, amp: f64) -> TangentPair {
        TangentPair {
            h: harmonics::random_band_sym2(&bg.grid, &bg.g0, 3, rng, amp),
            v: harmonics::random_band_scalar(&bg.grid, 3, rng, amp),
        }
    }

    #[test]
    fn base_values() {
        let bg = background();
        let base = bg.base_pair();
        let fourpi = 4.0 * std::f64::consts::PI;
        assert!((eval_a(&bg, &base) - fourpi).abs() < 1e-10 * fourpi);
        assert!((eval_b(&bg, &base) - 2.0 * fourpi).abs() < 1e-10 * fourpi);
        assert!((eval_a1(&bg, &base) - fourpi).abs() < 1e-10 * fourpi);
        assert!((eval_r(&bg, &base) - fourpi).abs() < 1e-10 * fourpi);
    }

    #[test]
    fn scaled_pair_closed_form() {
        // (rho^{-2} g0, rho): A = 4 pi rho, B = 8 pi rho, R = 4 pi rho
        // (hand computation: dmu scales by rho^{-2}, R_g by rho^2, w^3 by rho^3).
        let bg = background();
        let rho: f64 = 1.21;
        let pair = WeightedPair {
            g: MetricField::new(&bg.grid, bg.g0.comp.scale(1.0 / (rho * rho))).unwrap(),
            w: WeightField::constant(bg.n_nodes(), rho).unwrap(),
        };
        let fourpi = 4.0 * std::f64::consts::PI;
        assert!((eval_a(&bg, &pair) - fourpi * rho).abs() < 1e-10 * fourpi);
        assert!((eval_b(&bg, &pair) - 2.0 * fourpi * rho).abs() < 1e-9 * fourpi);
        assert!((eval_r(&bg, &pair) - fourpi * rho).abs() < 1e-9 * fourpi);
    }

    #[test]
    fn psi_duality_and_scaling() {
        let bg = background();
        let mut rng = Rng::seeded(11);
        let x = random_tangent(&bg, &mut rng, 0.05);
        let y = random_tangent(&bg, &mut rng, 0.05);
        // g = gbar: identity
        let psi = psi_map(&bg.gbar, &x.h, &bg.gbar);
        assert!(psi.sub(&x.h).max_abs() < 1e-12);
        // g = c gbar: Psi(J) = c^{-2} J
        let c = 1.37;
        let gc = MetricField::new(&bg.grid, bg.gbar.comp.scale(c)).unwrap();
        let psi_c = psi_map(&gc, &x.h, &bg.gbar);
        assert!(psi_c.sub(&x.h.scale(1.0 / (c * c))).max_abs() < 1e-12);
        // duality <h, J>_g = <h, Psi(J)>_gbar pointwise on a perturbed metric
        let g = MetricField::new(&bg.grid, bg.gbar.comp.add(&y.h)).unwrap();
        let lhs = geometry::inner_sym2(&g, &x.h, &y.h);
        let psi_y = psi_map(&g, &y.h, &bg.gbar);
        let rhs = geometry::inner_sym2(&bg.gbar, &x.h, &psi_y);
        for k in 0..bg.n_nodes() {
            assert!((lhs.vals[k] - rhs.vals[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_base() {
        let bg = background();
        let base = bg.base_pair();
        let g1 = project_gradient(&bg, &base).unwrap();
        let scale = l2_norm(&bg, &grad_a1(&bg, &base).unwrap());
        assert!(l2_norm(&bg, &g1) <= 1e-8 * scale, "criticality {}", l2_norm(&bg, &g1));
    }

    #[test]
    fn grad_a1_at_base_and_tangent_directions() {
        let bg = background();
        let base = bg.base_pair();
        let ga = grad_a1(&bg, &base).unwrap();
        assert!(ga.h.sub(&bg.gbar.comp.scale(0.5)).max_abs() < 1e-12);
        for v in &ga.v.vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
        // tangent directions annihilate grad A1
        let mut rng = Rng::seeded(3);
        for _ in 0..5 {
            let mut x = random_tangent(&bg, &mut rng, 0.05);
            // project to tangency: subtract the constant-v direction
            let resid = tangency_residual(&bg, &base, &x);
            let vol = eval_a1(&bg, &base);
            for v in x.v.vals.iter_mut() {
                *v -= resid / (bg.b_inf * vol);
            }
            assert!(tangency_residual(&bg, &base, &x).abs() < 1e-10);
            let ip = l2_inner(&bg, &ga, &x);
            let fd_a1 = fd::deriv1(&mut |t: f64| {
                let p = pair_along(&bg, &base, &x, t);
                eval_a1(&bg, &p)
            });
            assert!(ip.abs() < 1e-9, "tangency pairing {ip}");
            assert!(fd_a1.abs() < 1e-8);
        }
    }

    fn pair_along(bg: &BackgroundData, p: &WeightedPair, x: &TangentPair, t: f64) -> WeightedPair {
        let comp = p.g.comp.axpy(t, &x.h);
        let g = MetricField::new(&bg.grid, comp).unwrap();
        let w = WeightField::new(
            p.w.vals
                .iter()
                .zip(&x.v.vals)
                .map(|(w, v)| w * (t * v).exp())
                .collect(),
        )
        .unwrap();
        WeightedPair { g, w }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let bg = background();
        let base = bg.base_pair();
        let mut rng = Rng::seeded(17);
        for trial in 0..6 {
            let dir = random_tangent(&bg, &mut rng, 0.03);
            let at = random_tangent(&bg, &mut rng, 0.02);
            let p = pair_along(&bg, &base, &at, 1.0);
            // analytic pairings
            let gr = grad_r(&bg, &p).unwrap();
            let ip_r = l2_inner(&bg, &gr, &dir);
            let fd_r = fd::deriv1(&mut |t| eval_r(&bg, &pair_along(&bg, &p, &dir, t)));
            assert!(
                fd::rel_err(ip_r, fd_r) < 1e-6,
                "trial {trial}: grad R pairing {ip_r} vs FD {fd_r}"
            );
            let ga = grad_a1(&bg, &p).unwrap();
            let ip_a = l2_inner(&bg, &ga, &dir);
            let fd_a = fd::deriv1(&mut |t| eval_a1(&bg, &pair_along(&bg, &p, &dir, t)));
            assert!(fd::rel_err(ip_a, fd_a) < 1e-6, "grad A1 {ip_a} vs {fd_a}");
            // closed-form first-variation formulas
            let fva = first_variation_a(&bg, &p, &dir);
            let fda = fd::deriv1(&mut |t| eval_a(&bg, &pair_along(&bg, &p, &dir, t)));
            assert!(fd::rel_err(fva, fda) < 1e-6, "A' {fva} vs {fda}");
            let fvb = first_variation_b(&bg, &p, &dir);
            let fdb = fd::deriv1(&mut |t| eval_b(&bg, &pair_along(&bg, &p, &dir, t)));
            assert!(fd::rel_err(fvb, fdb) < 1e-6, "B' {fvb} vs {fdb}");
        }
    }

    #[test]
    fn base_first_variations_closed_form() {
        let bg = background();
        let base = bg.base_pair();
        let mut rng = Rng::seeded(23);
        let mut x = random_tangent(&bg, &mut rng, 0.05);
        let resid = tangency_residual(&bg, &base, &x);
        let vol = eval_a1(&bg, &base);
        for v in x.v.vals.iter_mut() {
            *v -= resid / (bg.b_inf * vol);
        }
        let b3 = bg.b_inf.powi(3);
        let int_v = integrate(&bg.grid, &x.v, &bg.gbar);
        let int_tr = integrate(&bg.grid, &trace(&bg.gbar, &x.h), &bg.gbar);
        let fva = first_variation_a(&bg, &base, &x);
        let fvb = first_variation_b(&bg, &base, &x);
        assert!((fva - 2.0 * b3 * int_v).abs() < 1e-9);
        assert!((fvb - (2.0 - bg.n as f64) * b3 * int_tr).abs() < 1e-8);
        // criticality: A' - B'/(n-2) = 0 over tangent directions
        assert!((fva - fvb / (bg.n as f64 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn exp_chart_contract() {
        let bg = background();
        let zero = TangentPair::zeros(bg.n_nodes());
        let base = exp_chart(&bg, &zero).unwrap();
        assert!(base.g.comp.sub(&bg.gbar.comp).max_abs() < 1e-14);
        for w in &base.w.vals {
            assert!((w - bg.b_inf).abs() < 1e-14);
        }
        let mut rng = Rng::seeded(5);
        let mut x = random_tangent(&bg, &mut rng, 0.04);
        // The chart's domain is the constraint-tangent subspace at the base.
        let resid = tangency_residual(&bg, &base, &x);
        let vol = eval_a1(&bg, &base);
        for v in x.v.vals.iter_mut() {
            *v -= resid / (bg.b_inf * vol);
        }
        let p = exp_chart(&bg, &x).unwrap();
        assert!(a1_residual(&bg, &p) < 1e-12, "renormalized constraint");
        // differential at 0 is the identity
        let n = bg.n_nodes();
        let mut flat = |t: f64| -> Vec<f64> {
            let q = exp_chart(&bg, &x.scale(t)).unwrap();
            let mut out = Vec::with_capacity(4 * n);
            for k in 0..n {
                out.extend_from_slice(&q.g.comp.vals[k]);
                out.push(q.w.vals[k].ln());
            }
            out
        };
        let d = fd::deriv1_vec(&mut flat, 1e-3, 1e-4);
        for k in 0..n {
            for c in 0..3 {
                assert!((d[4 * k + c] - x.h.vals[k][c]).abs() < 1e-6);
            }
            assert!((d[4 * k + 3] - x.v.vals[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn projection_orthogonality() {
        let bg = background();
        let base = bg.base_pair();
        let mut rng = Rng::seeded(29);
        let at = random_tangent(&bg, &mut rng, 0.02);
        let p = exp_chart(&bg, &at).unwrap();
        let g1 = project_gradient(&bg, &p).unwrap();
        let ga = grad_a1(&bg, &p).unwrap();
        let ip = l2_inner(&bg, &g1, &ga);
        let scale = l2_norm(&bg, &g1) * l2_norm(&bg, &ga);
        assert!(ip.abs() <= 1e-10 * scale.max(1e-30), "orthogonality {ip}");
        // parallel input projects to zero
        let z = project_out(&bg, &ga.scale(2.5), &ga);
        assert!(l2_norm(&bg, &z) < 1e-12 * l2_norm(&bg, &ga));
        let _ = base;
    }

    #[test]
    fn guard_refuses_far_pairs() {
        let bg = background();
        let w_bad = WeightField::constant(bg.n_nodes(), 1.9).unwrap();
        let p = WeightedPair { g: bg.gbar.clone(), w: w_bad };
        assert!(matches!(grad_r(&bg, &p), Err(FunctionalError::GuardViolation(_))));
    }
}
