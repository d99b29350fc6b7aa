//! Radial warped-product models ds^2 + f(s)^2 g0 over the unit round
//! cross-section, carrying the Green's-function coordinate b, the trace-free
//! Hessian of b^2, the scale-invariant level-set energies A(r) and Q(r), and
//! the level-set identity battery.
//!
//! The profile solves b' = (b/f)^{n-1}, the radial reduction of harmonicity
//! of G = b^{2-n} with the multiplicative constant fixed so that
//! r^{1-n} int_{b=r} |grad b| equals the unit-sphere area exactly; on
//! Euclidean space b is the distance function.
//!
//! Identities that require a Ricci-flat ambient space are checked here in
//! Gauss-corrected form with the ambient curvature carried explicitly; they
//! collapse to their uncorrected statements when the ambient Ricci vanishes.

use crate::functionals::{sphere_area, BackgroundData, WeightedPair};
use crate::fields::{MetricField, WeightField};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConeError {
    #[error("anchor s = {0} outside the model interval")]
    AnchorOutside(f64),
    #[error("warp vanishes at s = {0}")]
    WarpVanishes(f64),
    #[error("Green potential hits zero before the outer boundary (b blows up near s = {0:.4})")]
    Blowup(f64),
    #[error("level b = {0} not attained on the model interval")]
    LevelNotAttained(f64),
    #[error("annulus [{0:.3}, {1:.3}] exceeds the model interval")]
    AnnulusOutside(f64, f64),
    #[error("unknown warp preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Functional(#[from] crate::functionals::FunctionalError),
}

/// Warp profiles with closed-form first and second derivatives.
#[derive(Debug, Clone, Serialize)]
pub enum Warp {
    /// f = s
    Euclidean,
    /// f = a s (metric cone of slope a over the unit sphere)
    Cone { a: f64 },
    /// f = s (a + eps exp(-((s - center)/width)^2))
    Bump { a: f64, eps: f64, center: f64, width: f64 },
    /// f = s (a_in + (a_out - a_in) (1 + tanh((s - mid)/width)) / 2)
    SlopeInterp { a_in: f64, a_out: f64, mid: f64, width: f64 },
    /// f = sum c_k s^k
    Polynomial { coeffs: Vec<f64> },
}

impl Warp {
    pub fn f(&self, s: f64) -> f64 {
        match self {
            Warp::Euclidean => s,
            Warp::Cone { a } => a * s,
            Warp::Bump { a, eps, center, width } => {
                let u = (s - center) / width;
                s * (a + eps * (-u * u).exp())
            }
            Warp::SlopeInterp { a_in, a_out, mid, width } => {
                s * (a_in + (a_out - a_in) * 0.5 * (1.0 + ((s - mid) / width).tanh()))
            }
            Warp::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for c in coeffs.iter().rev() {
                    acc = acc * s + c;
                }
                acc
            }
        }
    }

    pub fn df(&self, s: f64) -> f64 {
        match self {
            Warp::Euclidean => 1.0,
            Warp::Cone { a } => *a,
            Warp::Bump { a, eps, center, width } => {
                let u = (s - center) / width;
                let e = (-u * u).exp();
                a + eps * e - s * eps * e * 2.0 * u / width
            }
            Warp::SlopeInterp { a_in, a_out, mid, width } => {
                let t = ((s - mid) / width).tanh();
                let sech2 = 1.0 - t * t;
                a_in + (a_out - a_in) * 0.5 * (1.0 + t)
                    + s * (a_out - a_in) * 0.5 * sech2 / width
            }
            Warp::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * s + k as f64 * c;
                }
                acc
            }
        }
    }

    pub fn ddf(&self, s: f64) -> f64 {
        match self {
            Warp::Euclidean | Warp::Cone { .. } => 0.0,
            Warp::Bump { eps, center, width, .. } => {
                let u = (s - center) / width;
                let e = (-u * u).exp();
                // d/ds of df with f = s g(s), g = a + eps e
                // f'' = 2 g' + s g''
                let gp = -eps * e * 2.0 * u / width;
                let gpp = eps * e * (4.0 * u * u - 2.0) / (width * width);
                2.0 * gp + s * gpp
            }
            Warp::SlopeInterp { a_in, a_out, mid, width } => {
                let t = ((s - mid) / width).tanh();
                let sech2 = 1.0 - t * t;
                let gp = (a_out - a_in) * 0.5 * sech2 / width;
                let gpp = -(a_out - a_in) * t * sech2 / (width * width);
                2.0 * gp + s * gpp
            }
            Warp::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(2).rev() {
                    acc = acc * s + (k * (k - 1)) as f64 * c;
                }
                acc
            }
        }
    }

    /// Named presets accepted by the experiment configuration, plus
    /// `polynomial:c0,c1,...` for an explicit coefficient list.
    pub fn preset(name: &str) -> Result<Warp, ConeError> {
        if let Some(list) = name.strip_prefix("polynomial:") {
            let coeffs: Result<Vec<f64>, _> = list.split(',').map(|c| c.trim().parse()).collect();
            return match coeffs {
                Ok(c) if !c.is_empty() => Ok(Warp::Polynomial { coeffs: c }),
                _ => Err(ConeError::UnknownPreset(name.to_string())),
            };
        }
        match name {
            "euclidean" => Ok(Warp::Euclidean),
            "cone-0.9" => Ok(Warp::Cone { a: 0.9 }),
            "bump" => Ok(Warp::Bump { a: 1.0, eps: 0.05, center: 1.6, width: 0.8 }),
            "slope-interp" => Ok(Warp::SlopeInterp {
                a_in: 1.0,
                a_out: 0.9,
                mid: 2.0,
                width: 0.5,
            }),
            other => Err(ConeError::UnknownPreset(other.to_string())),
        }
    }
}

/// Radial model dr^2 + f(s)^2 g0 on [s0, s1] in ambient dimension n.
#[derive(Debug, Clone, Serialize)]
pub struct WarpedModel {
    pub n: usize,
    pub s0: f64,
    pub s1: f64,
    pub warp: Warp,
}

impl WarpedModel {
    pub fn new(n: usize, s0: f64, s1: f64, warp: Warp) -> Result<WarpedModel, ConeError> {
        let m = WarpedModel { n, s0, s1, warp };
        // the warp must stay positive on the interval
        let steps = 2000;
        for i in 0..=steps {
            let s = s0 + (s1 - s0) * i as f64 / steps as f64;
            if m.warp.f(s) <= 0.0 {
                return Err(ConeError::WarpVanishes(s));
            }
        }
        Ok(m)
    }

    /// Exactly conical iff f(s) = a s; checked on a sample.
    pub fn is_cone(&self) -> bool {
        matches!(self.warp, Warp::Euclidean | Warp::Cone { .. })
    }

    /// Scalar curvature of the ambient warped metric at radius s.
    pub fn ambient_scalar(&self, s: f64) -> f64 {
        let d = (self.n - 1) as f64;
        let f = self.warp.f(s);
        let fp = self.warp.df(s);
        let fpp = self.warp.ddf(s);
        d * (d - 1.0) * (1.0 - fp * fp) / (f * f) - 2.0 * d * fpp / f
    }

    /// Radial-radial Ricci component Ric(d_s, d_s).
    pub fn ambient_ricci_radial(&self, s: f64) -> f64 {
        -((self.n - 1) as f64) * self.warp.ddf(s) / self.warp.f(s)
    }

    /// Tangential Ricci eigenvalue per unit tangent direction.
    pub fn ambient_ricci_tangential(&self, s: f64) -> f64 {
        let d = (self.n - 1) as f64;
        let f = self.warp.f(s);
        -self.warp.ddf(s) / f + (d - 1.0) * (1.0 - self.warp.df(s).powi(2)) / (f * f)
    }
}

/// Composite Gauss-Legendre quadrature (16-point panels) of g over [a, b].
fn integrate_1d(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // 16-point Gauss-Legendre nodes/weights on [-1, 1]
    const X: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.7554044083550030,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const W: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    if a == b {
        return 0.0;
    }
    let panels = (((b - a).abs() * 8.0).ceil() as usize).clamp(4, 200);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        for k in 0..8 {
            acc += W[k] * (g(mid + half * X[k]) + g(mid - half * X[k]));
        }
    }
    acc * 0.5 * h
}

/// Green's-function coordinate profile on a radial model: G' = (2-n) f^{1-n}
/// anchored at (s_a, b_a), with b = G^{1/(2-n)} and b' = (b/f)^{n-1}.
#[derive(Debug, Clone)]
pub struct GreenProfile {
    pub model: WarpedModel,
    pub s_anchor: f64,
    pub b_anchor: f64,
    g_anchor: f64,
}

impl GreenProfile {
    pub fn solve(model: &WarpedModel, anchor: (f64, f64)) -> Result<GreenProfile, ConeError> {
        let (sa, ba) = anchor;
        if !(model.s0 <= sa && sa <= model.s1) {
            return Err(ConeError::AnchorOutside(sa));
        }
        if ba <= 0.0 {
            return Err(ConeError::AnchorOutside(sa));
        }
        let gp = GreenProfile {
            model: model.clone(),
            s_anchor: sa,
            b_anchor: ba,
            g_anchor: ba.powf(2.0 - model.n as f64),
        };
        // reject profiles whose potential crosses zero inside the interval
        let steps = 400;
        for i in 0..=steps {
            let s = model.s0 + (model.s1 - model.s0) * i as f64 / steps as f64;
            if gp.potential(s) <= 0.0 {
                return Err(ConeError::Blowup(s));
            }
        }
        Ok(gp)
    }

    /// Anchor chosen so that the potential decays at infinity assuming the
    /// warp continues as the exact cone f = a_out s beyond s1; this is the
    /// normalization of a genuine Green's function with a pole at the origin.
    pub fn solve_with_cone_tail(model: &WarpedModel, a_out: f64) -> Result<GreenProfile, ConeError> {
        let n = model.n as f64;
        // G(s1) = (n-2) int_{s1}^inf (a_out t)^{1-n} dt = a_out^{1-n} s1^{2-n}
        let g1 = a_out.powf(1.0 - n) * model.s1.powf(2.0 - n);
        let b1 = g1.powf(1.0 / (2.0 - n));
        GreenProfile::solve(model, (model.s1, b1))
    }

    fn potential(&self, s: f64) -> f64 {
        let n = self.model.n as f64;
        let w = &self.model.warp;
        let tail = integrate_1d(&|t| w.f(t).powf(1.0 - n), self.s_anchor, s);
        self.g_anchor + (2.0 - n) * tail
    }

    pub fn b(&self, s: f64) -> f64 {
        self.potential(s).powf(1.0 / (2.0 - self.model.n as f64))
    }

    pub fn bp(&self, s: f64) -> f64 {
        let n = self.model.n as f64;
        (self.b(s) / self.model.warp.f(s)).powf(n - 1.0)
    }

    pub fn bpp(&self, s: f64) -> f64 {
        let n = self.model.n as f64;
        let b = self.b(s);
        let bp = self.bp(s);
        let f = self.model.warp.f(s);
        let fp = self.model.warp.df(s);
        (n - 1.0) * (bp * bp / b - bp * fp / f)
    }

    pub fn bppp(&self, s: f64) -> f64 {
        let n = self.model.n as f64;
        let b = self.b(s);
        let bp = self.bp(s);
        let bpp = self.bpp(s);
        let f = self.model.warp.f(s);
        let fp = self.model.warp.df(s);
        let fpp = self.model.warp.ddf(s);
        (n - 1.0)
            * (2.0 * bp * bpp / b - bp * bp * bp / (b * b) - bpp * fp / f - bp * fpp / f
                + bp * fp * fp / (f * f))
    }

    /// Estimated asymptotic slope of b at the outer boundary.
    pub fn b_inf_estimate(&self) -> f64 {
        self.bp(self.model.s1)
    }

    /// Monotone level location: the radius s with b(s) = r.
    pub fn s_of_level(&self, r: f64) -> Result<f64, ConeError> {
        let (mut lo, mut hi) = (self.model.s0, self.model.s1);
        let (blo, bhi) = (self.b(lo), self.b(hi));
        if !(blo <= r && r <= bhi) {
            return Err(ConeError::LevelNotAttained(r));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.b(mid) < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Residual of the harmonicity normalization b' f^{n-1} = b^{n-1},
    /// equivalently of the Stokes normalization of the level integral of
    /// |grad b|.
    pub fn ode_residual(&self, s: f64) -> f64 {
        let n = self.model.n as f64;
        let b = self.b(s);
        (self.bp(s) * self.model.warp.f(s).powf(n - 1.0) / b.powf(n - 1.0) - 1.0).abs()
    }
}

/// Pointwise level-set data of the trace-free Hessian of b^2 on a radial
/// model: the radial eigenvalue of B_b, the tangential eigenvalue (the
/// radial-tangential block vanishes by symmetry), the second fundamental
/// form, and the intrinsic curvature.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetData {
    pub s: f64,
    pub b: f64,
    /// |grad b| on the level set.
    pub grad_b: f64,
    /// induced metric is (f(s))^2 g0; scale relative to the level b:
    pub metric_scale: f64,
    /// B_b(n, n)
    pub b_rr: f64,
    /// tangential eigenvalue of B_b per unit direction
    pub b_tt: f64,
    /// |B_b|^2
    pub b_norm2: f64,
    /// |B_b(n)|^2
    pub b_n_norm2: f64,
    /// trace residual of B_b (should be at round-off)
    pub trace_residual: f64,
    /// residual of Delta b^2 = 2 n |grad b|^2
    pub harmonicity_residual: f64,
    /// umbilic factor: II = (f'/f) g^T
    pub ii_factor: f64,
    pub mean_curvature: f64,
    /// intrinsic scalar curvature of the level set
    pub level_scalar: f64,
}

/// Computes the trace-free Hessian data of b^2 at radius s.
pub fn trace_free_hessian(gp: &GreenProfile, s: f64) -> LevelSetData {
    let m = &gp.model;
    let n = m.n as f64;
    let d = n - 1.0;
    let b = gp.b(s);
    let bp = gp.bp(s);
    let bpp = gp.bpp(s);
    let f = m.warp.f(s);
    let fp = m.warp.df(s);
    // u = b^2: u' = 2 b b', u'' = 2 b'^2 + 2 b b''
    let up = 2.0 * b * bp;
    let upp = 2.0 * bp * bp + 2.0 * b * bpp;
    let lap_u = upp + d * up * fp / f;
    let b_rr = upp - 2.0 * bp * bp;
    let b_tt = up * fp / f - 2.0 * bp * bp;
    let b_norm2 = b_rr * b_rr + d * b_tt * b_tt;
    LevelSetData {
        s,
        b,
        grad_b: bp,
        metric_scale: f / b,
        b_rr,
        b_tt,
        b_norm2,
        b_n_norm2: b_rr * b_rr,
        trace_residual: (b_rr + d * b_tt).abs(),
        harmonicity_residual: (lap_u - 2.0 * n * bp * bp).abs(),
        ii_factor: fp / f,
        mean_curvature: d * fp / f,
        level_scalar: d * (d - 1.0) / (f * f),
    }
}

/// A(r) = r^{1-n} int_{b=r} |grad b|^3 = area(S^{n-1}) b'(s(r))^2.
pub fn eval_a_of_r(gp: &GreenProfile, r: f64) -> Result<f64, ConeError> {
    let s = gp.s_of_level(r)?;
    Ok(sphere_area(gp.model.n) * gp.bp(s) * gp.bp(s))
}

/// dA/dr through the level parameterization: 2 area b''(s(r)).
pub fn eval_aprime(gp: &GreenProfile, r: f64) -> Result<f64, ConeError> {
    let s = gp.s_of_level(r)?;
    Ok(2.0 * sphere_area(gp.model.n) * gp.bpp(s))
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedQ {
    pub value: f64,
    /// the integrand at the outer boundary, reported as the truncation scale
    pub boundary_integrand: f64,
}

/// Q(r) = int_{r <= b} b^{-n} |Hess b^2 - (Lap b^2 / n) g|^2, truncated at
/// the model boundary.
pub fn eval_q_of_r(gp: &GreenProfile, r: f64) -> Result<TruncatedQ, ConeError> {
    let s_lo = gp.s_of_level(r)?;
    let m = &gp.model;
    let n = m.n as f64;
    let area = sphere_area(m.n);
    let integrand = |s: f64| -> f64 {
        let data = trace_free_hessian(gp, s);
        data.b.powf(-n) * data.b_norm2 * m.warp.f(s).powf(n - 1.0) * area
    };
    let value = integrate_1d(&integrand, s_lo, m.s1);
    Ok(TruncatedQ {
        value,
        boundary_integrand: integrand(m.s1),
    })
}

/// The annulus integral int_{R/2 <= b <= 3R/2} b^{-n} |B|^2 that controls the
/// gradient and value defects at scale R.
pub fn annulus_energy(gp: &GreenProfile, r: f64) -> Result<f64, ConeError> {
    let s_lo = gp.s_of_level(0.5 * r)?;
    let s_hi = gp.s_of_level(1.5 * r)?;
    let m = &gp.model;
    let n = m.n as f64;
    let area = sphere_area(m.n);
    Ok(integrate_1d(
        &|s: f64| {
            let data = trace_free_hessian(gp, s);
            data.b.powf(-n) * data.b_norm2 * m.warp.f(s).powf(n - 1.0) * area
        },
        s_lo,
        s_hi,
    ))
}

/// Residual report for the level-set identity battery: each entry is
/// |lhs - rhs| normalized by max(|lhs|, |rhs|, 1).
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub s: f64,
    /// b grad |grad b|^2 = B_b(grad b)
    pub gradient_identity: f64,
    /// 2 b grad |grad b| = B_b(n)
    pub gradient_unit_identity: f64,
    /// divergence of B_b with the ambient Ricci term carried explicitly
    pub divergence_identity: f64,
    /// Laplacian of |grad b|^2 with the ambient Ricci term
    pub laplacian_identity: f64,
    /// trace-free second fundamental form (both component equations)
    pub second_fundamental_identity: f64,
    /// |B|^2 block decomposition
    pub decomposition_identity: f64,
    /// |II_0|^2 expression
    pub umbilic_identity: f64,
    /// level-set scalar curvature via the Gauss equation with ambient terms
    pub level_scalar_identity: f64,
    /// level-set Ricci via the Gauss equation with ambient terms
    pub level_ricci_identity: f64,
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

pub fn check_identities(gp: &GreenProfile, s: f64) -> IdentityReport {
    let m = &gp.model;
    let n = m.n as f64;
    let d = n - 1.0;
    let b = gp.b(s);
    let bp = gp.bp(s);
    let bpp = gp.bpp(s);
    let bppp = gp.bppp(s);
    let f = m.warp.f(s);
    let fp = m.warp.df(s);
    let data = trace_free_hessian(gp, s);
    let (alpha, beta) = (data.b_rr, data.b_tt);
    let up = 2.0 * b * bp;

    // b (|grad b|^2)' = B_rr b'
    let gradient_identity = rel(b * 2.0 * bp * bpp, alpha * bp);
    // 2 b b'' = B_rr
    let gradient_unit_identity = rel(2.0 * b * bpp, alpha);

    // (div B)_s = alpha' + d (f'/f)(alpha - beta)
    // corrected: (2n-2) (|grad b|^2)' + Ric_ss (b^2)'
    let alphap = {
        // alpha = u'' - 2 b'^2; u''' = 6 b' b'' + 2 b b'''
        let uppp = 6.0 * bp * bpp + 2.0 * b * bppp;
        uppp - 4.0 * bp * bpp
    };
    let div_b = alphap + d * (fp / f) * (alpha - beta);
    let ric_ss = m.ambient_ricci_radial(s);
    let divergence_identity = rel(div_b, (2.0 * n - 2.0) * 2.0 * bp * bpp + ric_ss * up);

    // b^2 Lap |grad b|^2 = |B|^2/2 + (2n-4) B(grad b, grad b) + 2 b^2 Ric(grad b, grad b)
    let nu_pp = 2.0 * (bpp * bpp + bp * bppp);
    let lap_nu = nu_pp + d * (fp / f) * 2.0 * bp * bpp;
    let laplacian_identity = rel(
        b * b * lap_nu,
        0.5 * data.b_norm2 + (2.0 * n - 4.0) * alpha * bp * bp + 2.0 * b * b * ric_ss * bp * bp,
    );

    // 2 b |grad b| H = 2 d |grad b|^2 - B(n,n); II_0 = 0 on radial models
    let h = data.mean_curvature;
    let sff1 = rel(2.0 * b * bp * h, 2.0 * d * bp * bp - alpha);
    let sff2 = (beta + alpha / d).abs() / alpha.abs().max(1.0); // trace-free part
    let second_fundamental_identity = sff1.max(sff2);

    // |B|^2 = |B_0|^2 + 2 |B(n)^T|^2 + B(n,n)^2 with B(n)^T = 0 radially
    let decomposition_identity = rel(data.b_norm2, d * beta * beta + alpha * alpha);

    // 4 b^2 |grad b|^2 |II_0|^2 = |B_0|^2 - B(n,n)^2/d  (both sides vanish)
    let umbilic_identity = rel(0.0, d * beta * beta - alpha * alpha / d);

    // level scalar curvature via Gauss with explicit ambient terms:
    // 4 b^2 |grad b|^2 R_T = 4 d (d-1) |grad b|^4 - 4 (d-1) |grad b|^2 B(n,n)
    //   - |B|^2 + 2 |B(n)|^2 + 4 b^2 |grad b|^2 (R_M - 2 Ric(n,n))
    let r_t = data.level_scalar;
    let r_m = m.ambient_scalar(s);
    let lhs = 4.0 * b * b * bp * bp * r_t;
    let rhs = 4.0 * d * (d - 1.0) * bp.powi(4) - 4.0 * (d - 1.0) * bp * bp * alpha
        - data.b_norm2
        + 2.0 * data.b_n_norm2
        + 4.0 * b * b * bp * bp * (r_m - 2.0 * ric_ss);
    let level_scalar_identity = rel(lhs, rhs);

    // level Ricci via Gauss: Ric_T(e,e) = Ric_M(e,e) - R(n,e,n,e) + H k - k^2
    let ric_t = (d - 1.0) / (f * f);
    let sec_rad = -m.warp.ddf(s) / f; // R(n, e, n, e) per unit tangent e
    let k = fp / f;
    let level_ricci_identity = rel(ric_t, m.ambient_ricci_tangential(s) - sec_rad + h * k - k * k);

    IdentityReport {
        s,
        gradient_identity,
        gradient_unit_identity,
        divergence_identity,
        laplacian_identity,
        second_fundamental_identity,
        decomposition_identity,
        umbilic_identity,
        level_scalar_identity,
        level_ricci_identity,
    }
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.gradient_identity,
            self.gradient_unit_identity,
            self.divergence_identity,
            self.laplacian_identity,
            self.second_fundamental_identity,
            self.decomposition_identity,
            self.umbilic_identity,
            self.level_scalar_identity,
            self.level_ricci_identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// The metric-general identities (no ambient curvature assumption).
    pub fn max_general_residual(&self) -> f64 {
        [
            self.gradient_identity,
            self.gradient_unit_identity,
            self.second_fundamental_identity,
            self.decomposition_identity,
            self.umbilic_identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The weighted pair induced on the level set b = R: metric (f/R)^2 g0 and
/// constant weight |grad b|, which satisfies the volume constraint exactly
/// by the Stokes normalization.
pub fn level_pair(
    bg: &BackgroundData,
    gp: &GreenProfile,
    r: f64,
) -> Result<WeightedPair, ConeError> {
    let s = gp.s_of_level(r)?;
    let c = gp.model.warp.f(s) / r;
    let comp = bg.g0.comp.scale(c * c);
    let g = MetricField::new(&bg.grid, comp).map_err(crate::functionals::FunctionalError::from)?;
    let w = WeightField::constant(bg.n_nodes(), gp.bp(s))
        .map_err(crate::functionals::FunctionalError::from)?;
    Ok(WeightedPair { g, w })
}

/// Two evaluations of the weighted functional on the level pair: through the
/// quadrature functional on the cross-section grid, and through A(R) plus the
/// closed-form correction integrals (the trace-free-Hessian term and the
/// ambient-curvature term that vanishes exactly on Ricci-flat models).
#[derive(Debug, Clone, Serialize)]
pub struct LevelValueReport {
    pub r: f64,
    pub via_functional: f64,
    pub via_level_formula: f64,
    pub difference_rel: f64,
    pub a_of_r: f64,
    pub hessian_correction: f64,
    pub ambient_correction: f64,
}

pub fn eval_r_levelset(
    bg: &BackgroundData,
    gp: &GreenProfile,
    r: f64,
) -> Result<LevelValueReport, ConeError> {
    let pair = level_pair(bg, gp, r)?;
    crate::functionals::guard_check(bg, &pair)?;
    let via_functional = crate::functionals::eval_r(bg, &pair);

    let m = &gp.model;
    let n = m.n as f64;
    let s = gp.s_of_level(r)?;
    let area = sphere_area(m.n);
    let data = trace_free_hessian(gp, s);
    let a_r = area * data.grad_b * data.grad_b;
    let hessian_correction = area / (n - 2.0)
        * (-data.b_rr
            + (2.0 * data.b_n_norm2 - data.b_norm2)
                / (4.0 * (n - 2.0) * data.grad_b * data.grad_b));
    let r_m = m.ambient_scalar(s);
    let ric_ss = m.ambient_ricci_radial(s);
    let ambient_correction = area * r * r * (r_m - 2.0 * ric_ss) / ((n - 2.0) * (n - 2.0));
    let via_level_formula = a_r + hessian_correction + ambient_correction;
    Ok(LevelValueReport {
        r,
        via_functional,
        via_level_formula,
        difference_rel: (via_functional - via_level_formula).abs()
            / via_functional.abs().max(1e-14),
        a_of_r: a_r,
        hessian_correction,
        ambient_correction,
    })
}

/// Fitted constants of the gradient-defect and value-defect inequalities at
/// scale R: the squared constrained-gradient norm of the level pair and the
/// defect A(R) - R-functional, each divided by the annulus energy.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub r: f64,
    pub gradient_norm2: f64,
    pub value_defect: f64,
    pub annulus_energy: f64,
    /// smallest admissible constant in the gradient inequality
    pub c_gradient: f64,
    /// smallest admissible constant in the value inequality (zero when the
    /// defect has the favorable sign)
    pub c_value: f64,
    /// scale-invariant C^1 bound constant for the trace-free Hessian
    pub c_meanval: f64,
}

pub fn check_property4(
    bg: &BackgroundData,
    gp: &GreenProfile,
    r: f64,
) -> Result<PropertyReport, ConeError> {
    let pair = level_pair(bg, gp, r)?;
    crate::functionals::guard_check(bg, &pair)?;
    let g1 = crate::functionals::project_gradient(bg, &pair)?;
    let gradient_norm2 = crate::functionals::l2_inner(bg, &g1, &g1);
    let energy = annulus_energy(gp, r)?;
    let lv = eval_r_levelset(bg, gp, r)?;
    let value_defect = lv.a_of_r - lv.via_functional;
    // scale-invariant C^1 norm of B_b at the level
    let s = gp.s_of_level(r)?;
    let c1 = c1_norm2(gp, s, r);
    let floor = 1e-300;
    Ok(PropertyReport {
        r,
        gradient_norm2,
        value_defect,
        annulus_energy: energy,
        c_gradient: gradient_norm2 / energy.max(floor),
        c_value: value_defect.max(0.0) / energy.max(floor),
        c_meanval: c1 / energy.max(floor),
    })
}

/// |B_b|^2 + R^2 |grad B_b|^2 at radius s (the scale-invariant C^1 norm).
fn c1_norm2(gp: &GreenProfile, s: f64, r: f64) -> f64 {
    let m = &gp.model;
    let d = m.n as f64 - 1.0;
    let data = trace_free_hessian(gp, s);
    let b = gp.b(s);
    let bp = gp.bp(s);
    let bpp = gp.bpp(s);
    let bppp = gp.bppp(s);
    let f = m.warp.f(s);
    let fp = m.warp.df(s);
    let fpp = m.warp.ddf(s);
    let up = 2.0 * b * bp;
    let upp = 2.0 * bp * bp + 2.0 * b * bpp;
    let uppp = 6.0 * bp * bpp + 2.0 * b * bppp;
    let alphap = uppp - 4.0 * bp * bpp;
    let betap = upp * fp / f + up * (fpp / f - fp * fp / (f * f)) - 4.0 * bp * bpp;
    let grad_b2 = alphap * alphap
        + d * betap * betap
        + 2.0 * d * (fp / f) * (fp / f) * (data.b_rr - data.b_tt) * (data.b_rr - data.b_tt);
    data.b_norm2 + r * r * grad_b2
}

/// The value and gradient inequalities over a family of models at a set of
/// radii, with per-member fitted constants.
pub fn property_family_sweep(
    bg: &BackgroundData,
    profiles: &[GreenProfile],
    radii: &[f64],
) -> Result<Vec<Vec<PropertyReport>>, ConeError> {
    profiles
        .iter()
        .map(|gp| radii.iter().map(|&r| check_property4(bg, gp, r)).collect())
        .collect()
}

/// The default five-member warp family used by the acceptance experiments:
/// equal-amplitude bumps with staggered centers inside the sampled annuli,
/// so every member's deviation is active at every sampled scale.
pub fn default_warp_family(n: usize) -> Result<Vec<WarpedModel>, ConeError> {
    [1.3f64, 1.4, 1.5, 1.6, 1.7]
        .iter()
        .map(|&center| {
            WarpedModel::new(
                n,
                0.35,
                4.5,
                Warp::Bump { a: 1.0, eps: 0.04, center, width: 0.7 },
            )
        })
        .collect()
}

/// CSV table of the radial profile and level-set energies.
pub fn profile_table_csv(gp: &GreenProfile, rows: usize) -> String {
    let m = &gp.model;
    let mut out = String::from("s,b,grad_b,a_of_r,q_of_r\n");
    for i in 0..rows {
        let s = m.s0 + (m.s1 - m.s0) * (i as f64 + 0.5) / rows as f64;
        let b = gp.b(s);
        let a = sphere_area(m.n) * gp.bp(s) * gp.bp(s);
        let q = eval_q_of_r(gp, b).map(|t| t.value).unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{s:.12e},{b:.12e},{:.12e},{a:.12e},{q:.12e}\n",
            gp.bp(s)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn bg() -> BackgroundData {
        BackgroundData::new(Grid::sphere(16, 32).unwrap(), 3, 1.0).unwrap()
    }

    #[test]
    fn euclidean_profile_is_identity() {
        let m = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
        let gp = GreenProfile::solve(&m, (1.0, 1.0)).unwrap();
        for i in 0..40 {
            let s = 0.3 + 4.7 * i as f64 / 39.0;
            assert!((gp.b(s) - s).abs() < 1e-10, "b({s}) = {}", gp.b(s));
            assert!(gp.ode_residual(s) < 1e-10);
        }
        let a = eval_a_of_r(&gp, 2.0).unwrap();
        assert!((a - 4.0 * std::f64::consts::PI).abs() < 1e-9);
        let q = eval_q_of_r(&gp, 1.0).unwrap();
        assert!(q.value.abs() < 1e-18);
        let data = trace_free_hessian(&gp, 2.0);
        assert!(data.b_norm2 < 1e-20);
        assert!(data.harmonicity_residual < 1e-9);
    }

    #[test]
    fn exact_cone_profile() {
        let a = 0.9f64;
        let m = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a }).unwrap();
        // anchored on the cone solution b = a^2 s (n = 3)
        let kappa = a * a;
        let gp = GreenProfile::solve(&m, (1.0, kappa)).unwrap();
        for i in 0..40 {
            let s = 0.4 + 4.0 * i as f64 / 39.0;
            assert!((gp.b(s) - kappa * s).abs() < 1e-10);
        }
        assert!((gp.b_inf_estimate() - 0.81).abs() < 1e-9);
        let r = 1.3;
        let aval = eval_a_of_r(&gp, r).unwrap();
        let expect = kappa * kappa * 4.0 * std::f64::consts::PI;
        assert!((aval - expect).abs() < 1e-9 * expect);
        // cones are critical: B_b vanishes identically
        let data = trace_free_hessian(&gp, 2.0);
        assert!(data.b_norm2 < 1e-18);
        let q = eval_q_of_r(&gp, 1.0).unwrap();
        assert!(q.value.abs() < 1e-16);
    }

    #[test]
    fn interpolating_warp_end_slope() {
        let m = WarpedModel::new(
            3,
            0.3,
            18.0,
            Warp::SlopeInterp { a_in: 1.0, a_out: 0.9, mid: 3.0, width: 0.6 },
        )
        .unwrap();
        let gp = GreenProfile::solve_with_cone_tail(&m, 0.9).unwrap();
        // b' > 0 everywhere
        for i in 0..60 {
            let s = 0.3 + 17.7 * i as f64 / 59.0;
            assert!(gp.bp(s) > 0.0);
        }
        // outer slope approaches the outer cone's profile slope a_out^2
        let kappa_out = 0.9f64 * 0.9;
        assert!(
            (gp.bp(18.0) - kappa_out).abs() < 1e-6,
            "end slope {} vs {kappa_out}",
            gp.bp(18.0)
        );
    }

    #[test]
    fn identity_battery() {
        // Euclidean: everything vaners to round-off
        let m0 = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
        let gp0 = GreenProfile::solve(&m0, (1.0, 1.0)).unwrap();
        let rep0 = check_identities(&gp0, 2.0);
        assert!(rep0.max_residual() < 1e-10, "euclidean: {:?}", rep0);

        // general warp: metric-general identities at round-off, corrected
        // curvature identities within 1e-6
        let m = WarpedModel::new(
            3,
            0.3,
            5.0,
            Warp::Bump { a: 1.0, eps: 0.08, center: 1.6, width: 0.7 },
        )
        .unwrap();
        let gp = GreenProfile::solve(&m, (0.5, 0.5)).unwrap();
        for s in [0.8, 1.4, 2.0, 2.8] {
            let rep = check_identities(&gp, s);
            assert!(rep.max_general_residual() < 1e-8, "general at {s}: {rep:?}");
            assert!(rep.max_residual() < 1e-6, "corrected at {s}: {rep:?}");
            // B_b is genuinely nonzero off the cone
            let data = trace_free_hessian(&gp, s);
            if s > 1.0 && s < 2.4 {
                assert!(data.b_norm2 > 1e-6);
            }
        }
        // dimension 4 as well (the formulas are n-generic)
        let m4 = WarpedModel::new(
            4,
            0.4,
            5.0,
            Warp::Bump { a: 1.0, eps: 0.05, center: 1.5, width: 0.8 },
        )
        .unwrap();
        let gp4 = GreenProfile::solve(&m4, (0.6, 0.6)).unwrap();
        for s in [0.9, 1.6, 2.5] {
            let rep = check_identities(&gp4, s);
            assert!(rep.max_residual() < 1e-6, "n=4 at {s}: {rep:?}");
        }
    }

    #[test]
    fn level_value_two_routes() {
        let bgd = bg();
        // Euclidean: R-functional = A = 4 pi, corrections vanish
        let m0 = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
        let gp0 = GreenProfile::solve(&m0, (1.0, 1.0)).unwrap();
        let rep0 = eval_r_levelset(&bgd, &gp0, 1.5).unwrap();
        let fourpi = 4.0 * std::f64::consts::PI;
        assert!((rep0.via_functional - fourpi).abs() < 1e-9);
        assert!(rep0.hessian_correction.abs() < 1e-12);
        assert!(rep0.ambient_correction.abs() < 1e-12);
        assert!(rep0.difference_rel < 1e-10);

        // exact cone: the Hessian correction vanishes; the ambient correction
        // carries the whole defect and the two routes agree
        let a = 0.9f64;
        let mc = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a }).unwrap();
        let gpc = GreenProfile::solve(&mc, (1.0, a * a)).unwrap();
        let repc = eval_r_levelset(&bgd, &gpc, 1.2).unwrap();
        assert!(repc.hessian_correction.abs() < 1e-12);
        assert!(repc.difference_rel < 1e-8, "cone routes: {repc:?}");
        // closed form: R-functional value = 8 pi a^2 - 4 pi a^4
        let expect = 8.0 * std::f64::consts::PI * a * a - fourpi * a.powi(4);
        assert!((repc.via_functional - expect).abs() < 1e-8 * expect.abs());

        // non-cone warp: routes agree to 1e-8
        let m = WarpedModel::new(
            3,
            0.4,
            6.0,
            Warp::Bump { a: 1.0, eps: 0.05, center: 1.6, width: 0.8 },
        )
        .unwrap();
        let gp = GreenProfile::solve(&m, (0.6, 0.6)).unwrap();
        let rep = eval_r_levelset(&bgd, &gp, 1.1).unwrap();
        assert!(rep.difference_rel < 1e-8, "warp routes: {rep:?}");
    }

    #[test]
    fn property_inequalities_on_family() {
        let bgd = bg();
        let family = default_warp_family(3).unwrap();
        let radii = [1.0, 1.2, 1.4];
        let mut c4s = Vec::new();
        let mut c5s = Vec::new();
        for model in &family {
            let gp = GreenProfile::solve(model, (model.s0, model.s0)).unwrap();
            for &r in &radii {
                let rep = check_property4(&bgd, &gp, r).unwrap();
                assert!(rep.annulus_energy > 0.0);
                c4s.push(rep.c_gradient);
                c5s.push(rep.c_value);
            }
        }
        let max4 = c4s.iter().cloned().fold(0.0, f64::max);
        let min4 = c4s.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max4 / min4 <= 10.0, "gradient constants spread: {c4s:?}");
        // the value constants stay uniformly bounded across the family
        let max5 = c5s.iter().cloned().fold(0.0, f64::max);
        assert!(max5.is_finite());
        // degenerating family: fitted gradient constant stays bounded
        let mut prev = f64::INFINITY;
        for eps in [0.04, 0.02, 0.01] {
            let m = WarpedModel::new(
                3,
                0.35,
                4.5,
                Warp::Bump { a: 1.0, eps, center: 1.4, width: 0.7 },
            )
            .unwrap();
            let gp = GreenProfile::solve(&m, (m.s0, m.s0)).unwrap();
            let rep = check_property4(&bgd, &gp, 1.2).unwrap();
            assert!(rep.c_gradient < 1e4);
            assert!(rep.c_gradient < prev * 5.0);
            prev = rep.c_gradient;
        }
        // Euclidean (the Ricci-flat cone): both sides vanish, 0 = 0
        let me = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
        let gpe = GreenProfile::solve(&me, (1.0, 1.0)).unwrap();
        let repe = check_property4(&bgd, &gpe, 1.2).unwrap();
        assert!(repe.gradient_norm2 < 1e-16);
        assert!(repe.annulus_energy < 1e-16);
        // a non-unit cone is not Ricci-flat: the trace-free Hessian vanishes
        // but the level pair is not critical, so the gradient inequality
        // genuinely needs the Ricci-flat hypothesis
        let mc = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a: 0.9 }).unwrap();
        let gpc = GreenProfile::solve(&mc, (1.0, 0.81)).unwrap();
        let repc = check_property4(&bgd, &gpc, 1.2).unwrap();
        assert!(repc.annulus_energy < 1e-16);
        assert!(repc.gradient_norm2 > 1e-6);
    }

    #[test]
    fn cone_rigidity() {
        // A constant iff B_b vanishes, checked both ways on samples
        let mc = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a: 0.9 }).unwrap();
        let gpc = GreenProfile::solve(&mc, (1.0, 0.81)).unwrap();
        let a1 = eval_a_of_r(&gpc, 0.5).unwrap();
        let a2 = eval_a_of_r(&gpc, 2.0).unwrap();
        assert!((a1 - a2).abs() < 1e-10);
        assert!(trace_free_hessian(&gpc, 2.0).b_norm2 < 1e-18);

        let m = WarpedModel::new(
            3,
            0.4,
            6.0,
            Warp::Bump { a: 1.0, eps: 0.05, center: 1.6, width: 0.8 },
        )
        .unwrap();
        let gp = GreenProfile::solve(&m, (0.6, 0.6)).unwrap();
        let b1 = eval_a_of_r(&gp, 1.0).unwrap();
        let b2 = eval_a_of_r(&gp, 2.0).unwrap();
        assert!((b1 - b2).abs() > 1e-6);
        assert!(trace_free_hessian(&gp, 1.6).b_norm2 > 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
        assert!(GreenProfile::solve(&m, (10.0, 1.0)).is_err());
        let gp = GreenProfile::solve(&m, (1.0, 1.0)).unwrap();
        assert!(matches!(
            gp.s_of_level(100.0),
            Err(ConeError::LevelNotAttained(_))
        ));
        // a potential crossing zero inside the interval is a blow-up
        let gp_bad = GreenProfile::solve(&m, (0.3, 5.0));
        assert!(matches!(gp_bad, Err(ConeError::Blowup(_))));
        assert!(Warp::preset("no-such-warp").is_err());
    }
}
