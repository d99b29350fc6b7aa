//! Centered finite differences with Richardson extrapolation, the oracle
//! against which every analytic variation formula is checked. Default steps
//! are 1e-3 and 1e-4.

pub const STEP_COARSE: f64 = 1e-3;
pub const STEP_FINE: f64 = 1e-4;

/// First derivative at 0 of a scalar path, single step.
pub fn central1(f: &mut dyn FnMut(f64) -> f64, eps: f64) -> f64 {
    (f(eps) - f(-eps)) / (2.0 * eps)
}

/// Second derivative at 0 of a scalar path, single step.
pub fn central2(f: &mut dyn FnMut(f64) -> f64, eps: f64) -> f64 {
    (f(eps) - 2.0 * f(0.0) + f(-eps)) / (eps * eps)
}

fn extrapolate(d1: f64, d2: f64, e1: f64, e2: f64) -> f64 {
    // Both stencils have leading error O(e^2).
    (e1 * e1 * d2 - e2 * e2 * d1) / (e1 * e1 - e2 * e2)
}

/// Richardson-extrapolated first derivative at 0.
pub fn deriv1(f: &mut dyn FnMut(f64) -> f64) -> f64 {
    let d1 = central1(f, STEP_COARSE);
    let d2 = central1(f, STEP_FINE);
    extrapolate(d1, d2, STEP_COARSE, STEP_FINE)
}

/// Richardson-extrapolated second derivative at 0. Second differences divide
/// accumulated evaluation round-off by e^2, so small steps are counter-
/// productive; a three-level table over {1.6e-2, 8e-3, 4e-3} removes the e^2
/// and e^4 truncation terms while keeping the cancellation noise near 1e-9.
pub fn deriv2(f: &mut dyn FnMut(f64) -> f64) -> f64 {
    let e = 4e-3;
    let d = [central2(f, 4.0 * e), central2(f, 2.0 * e), central2(f, e)];
    // step halving: one Richardson pass per order
    let r1 = [
        (4.0 * d[1] - d[0]) / 3.0,
        (4.0 * d[2] - d[1]) / 3.0,
    ];
    (16.0 * r1[1] - r1[0]) / 15.0
}

/// Richardson-extrapolated first derivative of a vector-valued path.
pub fn deriv1_vec(f: &mut dyn FnMut(f64) -> Vec<f64>, e1: f64, e2: f64) -> Vec<f64> {
    let fp1 = f(e1);
    let fm1 = f(-e1);
    let fp2 = f(e2);
    let fm2 = f(-e2);
    (0..fp1.len())
        .map(|k| {
            let d1 = (fp1[k] - fm1[k]) / (2.0 * e1);
            let d2 = (fp2[k] - fm2[k]) / (2.0 * e2);
            extrapolate(d1, d2, e1, e2)
        })
        .collect()
}

/// Relative error helper with an absolute floor.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_smooth_scalar() {
        let mut f = |t: f64| (1.3 * t).exp() * (0.7 + t).sin();
        let d_exact = 1.3 * 0.7f64.sin() + 0.7f64.cos();
        let dd_exact = 1.3 * 1.3 * 0.7f64.sin() + 2.0 * 1.3 * 0.7f64.cos() - 0.7f64.sin();
        assert!((deriv1(&mut f) - d_exact).abs() < 1e-10);
        assert!((deriv2(&mut f) - dd_exact).abs() < 1e-7);
    }
}
