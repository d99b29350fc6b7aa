//! Real spherical harmonics on the unit sphere, used to build band-limited
//! test fields and truncated variation bases.
//!
//! `Y(l, 0) = N P_l(cos t)`, `Y(l, m, cos) = sqrt(2) N P_l^m(cos t) cos(m p)`,
//! `Y(l, m, sin)` likewise; orthonormal for the round unit metric.

use crate::fields::ScalarField;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Azimuth {
    Zonal,
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicIndex {
    pub l: usize,
    pub m: usize,
    pub kind: Azimuth,
}

/// All real harmonics with `l_min <= l <= l_max`, zonal first per degree.
pub fn enumerate(l_min: usize, l_max: usize) -> Vec<HarmonicIndex> {
    let mut out = Vec::new();
    for l in l_min..=l_max {
        out.push(HarmonicIndex { l, m: 0, kind: Azimuth::Zonal });
        for m in 1..=l {
            out.push(HarmonicIndex { l, m, kind: Azimuth::Cos });
            out.push(HarmonicIndex { l, m, kind: Azimuth::Sin });
        }
    }
    out
}

/// Associated Legendre P_l^m(x) without Condon-Shortley phase, for all l up
/// to l_max at fixed m.
fn legendre_col(m: usize, l_max: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; l_max + 1];
    if m > l_max {
        return p;
    }
    // P_m^m = (2m-1)!! (1-x^2)^{m/2}
    let mut pmm = 1.0;
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut fact = 1.0;
    for _ in 0..m {
        pmm *= fact * somx2;
        fact += 2.0;
    }
    p[m] = pmm;
    if m < l_max {
        p[m + 1] = x * (2.0 * m as f64 + 1.0) * pmm;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            p[l] = ((2.0 * lf - 1.0) * x * p[l - 1] - (lf + mf - 1.0) * p[l - 2]) / (lf - mf);
        }
    }
    p
}

fn norm_const(l: usize, m: usize) -> f64 {
    let lf = l as f64;
    let mut ratio = 1.0; // (l-m)! / (l+m)!
    for k in (l - m + 1)..=(l + m) {
        ratio /= k as f64;
    }
    ((2.0 * lf + 1.0) / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// Nodal values of one orthonormal real harmonic.
pub fn harmonic(grid: &Grid, idx: HarmonicIndex) -> ScalarField {
    let nodes = grid.nodes();
    let nc = norm_const(idx.l, idx.m);
    let vals = nodes
        .iter()
        .map(|&(t, p)| {
            let plm = legendre_col(idx.m, idx.l, t.cos())[idx.l];
            match idx.kind {
                Azimuth::Zonal => nc * plm,
                Azimuth::Cos => std::f64::consts::SQRT_2 * nc * plm * ((idx.m as f64) * p).cos(),
                Azimuth::Sin => std::f64::consts::SQRT_2 * nc * plm * ((idx.m as f64) * p).sin(),
            }
        })
        .collect();
    ScalarField { vals }
}

/// Laplace eigenvalue of degree l on the round unit sphere.
pub fn eigenvalue(l: usize) -> f64 {
    -((l * (l + 1)) as f64)
}

/// Seeded band-limited scalar with degree-damped coefficients, rescaled to
/// the requested max-abs amplitude.
pub fn random_band_scalar(
    grid: &Grid,
    l_max: usize,
    rng: &mut crate::rng::Rng,
    amp: f64,
) -> ScalarField {
    let n = grid.n_nodes();
    let mut u = ScalarField::zeros(n);
    for &idx in &enumerate(0, l_max) {
        let y = harmonic(grid, idx);
        let c = rng.symmetric() / (1.0 + (idx.l * (idx.l + 1)) as f64).sqrt();
        for k in 0..n {
            u.vals[k] += c * y.vals[k];
        }
    }
    let m = u.max_abs();
    if m > 0.0 {
        u = u.scale(amp / m);
    }
    u
}

/// Seeded band-limited symmetric 2-tensor: conformal multiples of the round
/// metric plus eigenvalue-normalized Hessians, rescaled to max-abs `amp`.
pub fn random_band_sym2(
    grid: &Grid,
    g0: &crate::fields::MetricField,
    l_max: usize,
    rng: &mut crate::rng::Rng,
    amp: f64,
) -> crate::fields::SymTensorField {
    let n = grid.n_nodes();
    let mut h = crate::fields::SymTensorField::zeros(n);
    for &idx in &enumerate(0, l_max) {
        let y = harmonic(grid, idx);
        let c0 = rng.symmetric();
        let c1 = rng.symmetric();
        if idx.l == 0 {
            for k in 0..n {
                for c in 0..3 {
                    h.vals[k][c] += c0 * y.vals[k] * g0.comp.vals[k][c];
                }
            }
            continue;
        }
        let hy = crate::geometry::hessian(grid, g0, &y);
        let scale = 1.0 / (idx.l * (idx.l + 1)) as f64;
        for k in 0..n {
            for c in 0..3 {
                h.vals[k][c] +=
                    c0 * y.vals[k] * g0.comp.vals[k][c] + c1 * scale * hy.vals[k][c];
            }
        }
    }
    let m = h.max_abs();
    if m > 0.0 {
        h = h.scale(amp / m);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{integrate, laplacian, round_sphere_metric};

    #[test]
    fn orthonormal_and_eigen() {
        let grid = Grid::sphere(24, 48).unwrap();
        let g = round_sphere_metric(&grid, 1.0).unwrap();
        let idxs = enumerate(0, 4);
        for (a, &ia) in idxs.iter().enumerate() {
            let ya = harmonic(&grid, ia);
            for &ib in idxs.iter().skip(a) {
                let yb = harmonic(&grid, ib);
                let ip = integrate(&grid, &ya.mul(&yb), &g);
                let expect = if ia == ib { 1.0 } else { 0.0 };
                assert!(
                    (ip - expect).abs() < 1e-12,
                    "orthonormality: {ia:?} vs {ib:?} -> {ip}"
                );
            }
            let lap = laplacian(&grid, &g, &ya);
            let lam = eigenvalue(ia.l);
            for k in 0..ya.len() {
                assert!((lap.vals[k] - lam * ya.vals[k]).abs() < 1e-10);
            }
        }
    }
}
