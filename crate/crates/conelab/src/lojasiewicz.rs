//! Finite-dimensional critical-point machinery around the round base pair:
//! the objective G (the weighted curvature functional composed with the
//! renormalized chart) over a truncated non-gauge basis, Lyapunov-Schmidt
//! reduction of grad G + kernel projection with a chord-Newton inverse, an
//! empirical decay exponent fitted from sampled values and gradients, and a
//! safeguarded steepest-descent flow.

use crate::fd;
use crate::functionals::{
    eval_r, exp_chart, l2_inner, project_gradient, tangency_residual, BackgroundData,
    FunctionalError, TangentPair,
};
use crate::linearize::{KernelBasis, OperatorMatrix, VariationBasis};
use crate::rng::Rng;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LojasiewiczError {
    #[error("direction {0} is outside the reduced (gauge-free) basis")]
    GaugeDirection(usize),
    #[error("Newton iteration diverged at radius {radius:.3e}; shrink the sampling radius (residual {residual:.3e} after {iters} iterations)")]
    NewtonDiverged { radius: f64, residual: f64, iters: usize },
    #[error("reduction operator is numerically singular (smallest |eigenvalue| {0:.3e})")]
    SingularReduction(f64),
    #[error("no samples requested")]
    EmptySampleSet,
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// A differentiable objective on a finite-dimensional coordinate space.
pub trait ObjectiveMap {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
}

/// The weighted curvature functional composed with the renormalized chart,
/// in coordinates over the non-gauge (conformal + transverse-traceless)
/// elements of a variation basis. Gauge directions are excluded from the
/// coordinate space by construction; asking for one is an error.
pub struct ChartObjective<'a> {
    pub bg: &'a BackgroundData,
    pub basis: &'a VariationBasis,
    restricted: Vec<usize>,
}

impl<'a> ChartObjective<'a> {
    pub fn new(bg: &'a BackgroundData, basis: &'a VariationBasis) -> Self {
        ChartObjective {
            bg,
            basis,
            restricted: basis.restricted_indices(),
        }
    }

    pub fn restricted_indices(&self) -> &[usize] {
        &self.restricted
    }

    /// Coordinate index of a full-basis element; gauge directions are not
    /// part of the coordinate space and are rejected.
    pub fn coordinate_of(&self, basis_index: usize) -> Result<usize, LojasiewiczError> {
        self.restricted
            .iter()
            .position(|&i| i == basis_index)
            .ok_or(LojasiewiczError::GaugeDirection(basis_index))
    }

    /// The gradient as a tangent pair (the coordinate gradient recombined
    /// over the basis elements).
    pub fn grad_pair(&self, x: &[f64]) -> TangentPair {
        let coords = self.grad(x);
        let n = self.bg.n_nodes();
        let mut out = TangentPair::zeros(n);
        for (c, &i) in coords.iter().zip(&self.restricted) {
            if *c != 0.0 {
                out = out.axpy(*c, &self.basis.elements[i]);
            }
        }
        out
    }

    fn tangent_from_coords(&self, x: &[f64]) -> TangentPair {
        let n = self.bg.n_nodes();
        let mut out = TangentPair::zeros(n);
        for (c, &i) in x.iter().zip(&self.restricted) {
            if *c != 0.0 {
                out = out.axpy(*c, &self.basis.elements[i]);
            }
        }
        out
    }

    /// The weighted pair reached by the chart at these coordinates.
    pub fn pair_at(&self, x: &[f64]) -> Result<crate::functionals::WeightedPair, FunctionalError> {
        exp_chart(self.bg, &self.tangent_from_coords(x))
    }
}

impl ObjectiveMap for ChartObjective<'_> {
    fn dim(&self) -> usize {
        self.restricted.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let p = self.pair_at(x).expect("chart evaluation outside guard");
        eval_r(self.bg, &p)
    }

    /// Gradient through the transpose of the chart differential: the
    /// coordinate pairing is <grad_1 R (exp x), dexp_x(e_i)> where
    /// dexp_x(e) = (h_e, v_e - s) and s re-centers the log-weight so the
    /// renormalization is respected.
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let bg = self.bg;
        let p = self.pair_at(x).expect("chart evaluation outside guard");
        let g1 = project_gradient(bg, &p).expect("gradient outside guard");
        let vol = bg.vol_target();
        self.restricted
            .iter()
            .map(|&i| {
                let e = &self.basis.elements[i];
                let s = tangency_residual(bg, &p, e) / vol;
                let shifted = TangentPair {
                    h: e.h.clone(),
                    v: crate::fields::ScalarField {
                        vals: e.v.vals.iter().map(|v| v - s).collect(),
                    },
                };
                l2_inner(bg, &g1, &shifted)
            })
            .collect()
    }
}

/// Synthetic radial objective |x|^p with a known decay exponent, used as the
/// recovery oracle for the estimator.
pub struct PowerObjective {
    pub dim: usize,
    pub power: f64,
}

impl ObjectiveMap for PowerObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        n2.powf(self.power / 2.0)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        if n2 == 0.0 {
            return vec![0.0; self.dim];
        }
        let f = self.power * n2.powf(self.power / 2.0 - 1.0);
        x.iter().map(|v| f * v).collect()
    }
}

/// A quadratic-plus-quartic test objective with a prescribed kernel,
/// exercising the reduction on a model where everything is checkable.
pub struct ModelObjective {
    pub a_diag: Vec<f64>,
    pub quartic: f64,
}

impl ObjectiveMap for ModelObjective {
    fn dim(&self) -> usize {
        self.a_diag.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let quad: f64 = x.iter().zip(&self.a_diag).map(|(v, a)| 0.5 * a * v * v).sum();
        let n2: f64 = x.iter().map(|v| v * v).sum();
        quad + 0.25 * self.quartic * n2 * n2
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        x.iter()
            .zip(&self.a_diag)
            .map(|(v, a)| a * v + self.quartic * n2 * v)
            .collect()
    }
}

/// Lyapunov-Schmidt reduction data: kernel projection, factored chord matrix
/// for the Newton inverse, and the reduced function on kernel coordinates.
pub struct Reduction<'a> {
    pub map: &'a dyn ObjectiveMap,
    pub kernel: Vec<DVector<f64>>,
    pub base_value: f64,
    pub min_abs_eigenvalue: f64,
    chord: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub newton_tol: f64,
    pub max_iter: usize,
}

/// Builds the reduction from the assembled operator restricted to the
/// non-gauge block and its near-kernel. The chord matrix L + Pi_K must be
/// numerically invertible; its minimal |eigenvalue| is certified and stored.
pub fn build_reduction<'a>(
    map: &'a dyn ObjectiveMap,
    op: &OperatorMatrix,
    kernel: &KernelBasis,
) -> Result<Reduction<'a>, LojasiewiczError> {
    let r = kernel.restricted.len();
    assert_eq!(map.dim(), r, "objective dimension must match the restricted block");
    let mut l = DMatrix::zeros(r, r);
    for (a, &i) in kernel.restricted.iter().enumerate() {
        for (b, &j) in kernel.restricted.iter().enumerate() {
            l[(a, b)] = 0.5 * (op.m[(i, j)] + op.m[(j, i)]);
        }
    }
    let mut chord = l;
    for k in &kernel.vectors {
        chord += k * k.transpose();
    }
    let eig = chord.clone().symmetric_eigen();
    let min_abs = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if min_abs <= 1e-10 * scale.max(1e-30) {
        return Err(LojasiewiczError::SingularReduction(min_abs));
    }
    let lu = chord.clone().lu();
    Ok(Reduction {
        map,
        kernel: kernel.vectors.clone(),
        base_value: map.eval(&vec![0.0; r]),
        min_abs_eigenvalue: min_abs,
        chord,
        lu,
        newton_tol: 1e-12,
        max_iter: 50,
    })
}

impl Reduction<'_> {
    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Projection onto the kernel span.
    pub fn project_kernel(&self, x: &[f64]) -> DVector<f64> {
        let xv = DVector::from_column_slice(x);
        let mut out = DVector::zeros(x.len());
        for k in &self.kernel {
            let c = k.dot(&xv);
            out += k * c;
        }
        out
    }

    /// The shifted gradient map N(x) = grad G(x) + Pi_K x.
    pub fn n_map(&self, x: &[f64]) -> DVector<f64> {
        let g = DVector::from_vec(self.map.grad(x));
        g + self.project_kernel(x)
    }

    /// Chord-Newton inverse of N: solves N(x) = y starting at x = y.
    pub fn phi(&self, y: &[f64]) -> Result<DVector<f64>, LojasiewiczError> {
        let yv = DVector::from_column_slice(y);
        let mut x = yv.clone();
        let scale = yv.norm().max(1.0);
        for it in 0..self.max_iter {
            let res = self.n_map(x.as_slice()) - &yv;
            let rnorm = res.norm();
            if rnorm <= self.newton_tol * scale {
                return Ok(x);
            }
            let step = self
                .lu
                .solve(&res)
                .ok_or(LojasiewiczError::SingularReduction(0.0))?;
            x -= step;
            if x.norm() > 1e3 * scale.max(1.0) {
                return Err(LojasiewiczError::NewtonDiverged {
                    radius: yv.norm(),
                    residual: rnorm,
                    iters: it + 1,
                });
            }
        }
        let res = (self.n_map(x.as_slice()) - &yv).norm();
        if res <= 1e-8 * scale {
            Ok(x)
        } else {
            Err(LojasiewiczError::NewtonDiverged {
                radius: yv.norm(),
                residual: res,
                iters: self.max_iter,
            })
        }
    }

    /// The reduced function f(y) = G(Phi(embedded kernel coordinates)).
    pub fn reduced_f(&self, ycoords: &[f64]) -> Result<f64, LojasiewiczError> {
        let mut y = DVector::zeros(self.dim());
        for (c, k) in ycoords.iter().zip(&self.kernel) {
            y += k * *c;
        }
        let x = self.phi(y.as_slice())?;
        Ok(self.map.eval(x.as_slice()))
    }

    /// Gradient of the reduced function on kernel coordinates, by
    /// Richardson finite differences (the kernel dimension is small).
    pub fn reduced_grad(&self, ycoords: &[f64]) -> Result<Vec<f64>, LojasiewiczError> {
        let k = self.kernel.len();
        let mut out = vec![0.0; k];
        for i in 0..k {
            let mut fi = |t: f64| -> f64 {
                let mut y = ycoords.to_vec();
                y[i] += t;
                self.reduced_f(&y).expect("reduced function inside radius")
            };
            out[i] = fd::deriv1(&mut fi);
        }
        Ok(out)
    }

    pub fn chord_matrix(&self) -> &DMatrix<f64> {
        &self.chord
    }

    /// Largest observed ratio |Phi(x) - Phi(y)| / |x - y| over seeded sample
    /// pairs inside the given radius (the Lipschitz sanity record).
    pub fn lipschitz_estimate(
        &self,
        radius: f64,
        pairs: usize,
        seed: u64,
    ) -> Result<f64, LojasiewiczError> {
        let mut rng = Rng::seeded(seed);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let x = rng.ball(self.dim(), radius);
            let y = rng.ball(self.dim(), radius);
            let px = self.phi(&x)?;
            let py = self.phi(&y)?;
            let num = (&px - &py).norm();
            let den: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if den > 1e-14 {
                worst = worst.max(num / den);
            }
        }
        Ok(worst)
    }
}

/// Empirical decay-exponent estimate with the fitted constants of the
/// surrounding inequality chain.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentEstimate {
    pub alpha_hat: f64,
    /// Fitted constant C with |G - G0|^{2 - alpha} <= C |grad G|^2 over the samples.
    pub constant: f64,
    pub worst_ratio: f64,
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
    /// Largest alpha accepted by the capped search (reported alongside the
    /// regression estimate).
    pub alpha_capped: f64,
    /// Fitted constant of the kernel-gradient comparison, when a reduction
    /// was supplied.
    pub grad_comparison_constant: Option<f64>,
    /// Fitted constant of the value-correction comparison.
    pub value_comparison_constant: Option<f64>,
    /// Fitted constant of the chained reduced-function inequality.
    pub chain_constant: Option<f64>,
    pub valid: bool,
}

/// Fits the largest decay exponent consistent with the sampled values:
/// a log-log regression of |grad G|^2 on |G - G0| gives the exponent, and a
/// capped bisection confirms the largest alpha whose fitted constant stays
/// within a factor two of the regression fit.
pub fn estimate_exponent(
    map: &dyn ObjectiveMap,
    reduction: Option<&Reduction<'_>>,
    radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ExponentEstimate, LojasiewiczError> {
    if n_samples == 0 {
        return Err(LojasiewiczError::EmptySampleSet);
    }
    let dim = map.dim();
    let g0 = map.eval(&vec![0.0; dim]);
    let mut rng = Rng::seeded(seed);
    let mut dgs = Vec::with_capacity(n_samples);
    let mut grads2 = Vec::with_capacity(n_samples);
    let mut points = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = rng.ball(dim, radius);
        let dg = (map.eval(&x) - g0).abs();
        let n2: f64 = map.grad(&x).iter().map(|v| v * v).sum();
        if dg > 1e-14 && n2 > 1e-28 {
            dgs.push(dg);
            grads2.push(n2);
        }
        points.push(x);
    }
    if dgs.is_empty() {
        return Err(LojasiewiczError::EmptySampleSet);
    }
    // regression slope of log |grad|^2 against log |dG|
    let lx: Vec<f64> = dgs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = grads2.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 2.0 };
    let alpha_hat = (2.0 - slope).clamp(0.01, 0.999);

    let fit_constant = |alpha: f64| -> f64 {
        dgs.iter()
            .zip(&grads2)
            .map(|(dg, n2)| dg.powf(2.0 - alpha) / n2)
            .fold(0.0, f64::max)
    };
    let c_hat = fit_constant(alpha_hat);
    // capped bisection: the largest alpha whose fitted constant stays within
    // a factor 2 of the regression fit
    let mut lo = alpha_hat;
    let mut hi = 0.999;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if fit_constant(mid) <= 2.0 * c_hat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_capped = lo;
    // verification of the fitted inequality
    let mut worst: f64 = 0.0;
    for (dg, n2) in dgs.iter().zip(&grads2) {
        worst = worst.max(dg.powf(2.0 - alpha_hat) / (c_hat * n2));
    }

    // reduction-lemma constants on a subset
    let (mut cg, mut cv, mut cc) = (None, None, None);
    if let Some(red) = reduction {
        let subset = points.iter().take(20.min(points.len()));
        let mut worst_g: f64 = 0.0;
        let mut worst_v: f64 = 0.0;
        let mut worst_c: f64 = 0.0;
        for x in subset {
            let n2: f64 = map.grad(x).iter().map(|v| v * v).sum();
            if n2 < 1e-24 {
                continue;
            }
            let pk = red.project_kernel(x);
            let ycoords: Vec<f64> = red.kernel.iter().map(|k| k.dot(&pk)).collect();
            let gf = red.reduced_grad(&ycoords)?;
            let gf2: f64 = gf.iter().map(|v| v * v).sum();
            worst_g = worst_g.max(gf2 / n2);
            let fval = red.reduced_f(&ycoords)?;
            worst_v = worst_v.max((map.eval(x) - fval).abs() / n2);
            worst_c = worst_c.max((fval - g0).abs().powf(2.0 - alpha_hat) / n2);
        }
        cg = Some(worst_g);
        cv = Some(worst_v);
        cc = Some(worst_c);
    }

    Ok(ExponentEstimate {
        alpha_hat,
        constant: c_hat,
        worst_ratio: worst,
        samples: dgs.len(),
        radius,
        seed,
        alpha_capped,
        grad_comparison_constant: cg,
        value_comparison_constant: cv,
        chain_constant: cc,
        valid: worst <= 1.0 + 1e-12,
    })
}

/// Steepest-descent trajectory report.
#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub values: Vec<f64>,
    pub final_point: Vec<f64>,
    pub step: f64,
    pub halvings: usize,
    pub monotone: bool,
    /// Geometric mean of successive (G_k - G(0))/(G_{k-1} - G(0)) ratios,
    /// measuring decay toward the critical value at the origin.
    pub mean_ratio: f64,
}

/// Explicit descent x <- x - step grad G(x) with step halving whenever the
/// value increases.
pub fn gradient_flow(map: &dyn ObjectiveMap, x0: &[f64], step: f64, iters: usize) -> FlowReport {
    let mut x = x0.to_vec();
    let mut s = step;
    let mut values = vec![map.eval(&x)];
    let mut halvings = 0;
    for _ in 0..iters {
        let g = map.grad(&x);
        let cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - s * b).collect();
        let val = map.eval(&cand);
        if val > *values.last().unwrap() + 1e-15 {
            s *= 0.5;
            halvings += 1;
            continue;
        }
        x = cand;
        values.push(val);
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-14);
    let gstar = map.eval(&vec![0.0; map.dim()]);
    let mut ratios = Vec::new();
    for w in values.windows(2) {
        let a = w[0] - gstar;
        let b = w[1] - gstar;
        if a > 1e-300 && b > 0.0 {
            ratios.push(b / a);
        }
    }
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };
    FlowReport {
        values,
        final_point: x,
        step,
        halvings,
        monotone,
        mean_ratio,
    }
}
