//! Second variations at the round base pair, the conformal block operator,
//! truncated variation bases with transverse-traceless / conformal / gauge
//! labels, the York-type splitting of metric variations, finite-difference
//! assembly of the constrained-gradient linearization, and its near-kernel.
//!
//! Second-variation conventions: x = (h, v) and xprime = (h', v') describe
//! the path `(gbar + t h + t^2/2 h', b_inf e^{t v + t^2 v'})`, so the primed
//! data is the second-order Taylor data of the family.

use crate::fd;
use crate::fields::{MetricField, ScalarField, SymTensorField, VectorField};
use crate::functionals::{
    self, exp_chart, l2_inner, l2_norm, project_gradient, BackgroundData, FunctionalError,
    TangentPair, WeightedPair,
};
use crate::fields::WeightField;
use crate::geometry::{
    cov_deriv_oneform, divergence_sym2_oneform, double_divergence, gradient, hessian, inner_sym2,
    integrate, laplacian, lichnerowicz, lichnerowicz_curvature_term, lie_derivative_metric,
    l2_norm_scalar, l2_norm_sym2, rough_laplacian_sym2, trace,
};
use crate::harmonics::{self, harmonic};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinearizeError {
    #[error("input is not transverse-traceless: divergence residual {div:.3e}, trace residual {tr:.3e}")]
    NotTransverseTraceless { div: f64, tr: f64 },
    #[error("variation is not tangent to the constraint set: residual {0:.3e}")]
    NotTangent(f64),
    #[error("vector-field basis too small: divergence residual {0:.3e}")]
    BasisTooSmall(f64),
    #[error("basis Gram matrix not positive definite (min eigenvalue {0:.3e})")]
    GramNotPd(f64),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Second variation of A along (x, xprime) at the base pair:
/// b^3 int { 4 v (Tr h / 2 + 2 v) + (Tr h / 2 + v)^2 + 6 v' - |h|^2/2 + Tr h'/2 }.
pub fn second_variation_a(bg: &BackgroundData, x: &TangentPair, xprime: &TangentPair) -> f64 {
    let g = &bg.gbar;
    let tr_h = trace(g, &x.h);
    let tr_hp = trace(g, &xprime.h);
    let h2 = inner_sym2(g, &x.h, &x.h);
    let n = bg.n_nodes();
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let th = 0.5 * tr_h.vals[k];
            let v = x.v.vals[k];
            4.0 * v * (th + 2.0 * v) + (th + v) * (th + v) + 6.0 * xprime.v.vals[k]
                - 0.5 * h2.vals[k]
                + 0.5 * tr_hp.vals[k]
        })
        .collect();
    bg.b_inf.powi(3) * integrate(&bg.grid, &ScalarField { vals }, g)
}

/// Second variation of B along (x, xprime) at the base pair.
pub fn second_variation_b(bg: &BackgroundData, x: &TangentPair, xprime: &TangentPair) -> f64 {
    let grid = &bg.grid;
    let g = &bg.gbar;
    let nn = bg.n as f64;
    let b2 = bg.b_inf * bg.b_inf;
    let h = &x.h;
    let v = &x.v;

    let tr_h = trace(g, h);
    let tr_hp = trace(g, &xprime.h);
    let h2 = inner_sym2(g, h, h);
    let div_h = divergence_sym2_oneform(grid, g, h);
    let ndiv = cov_deriv_oneform(grid, g, &div_h);
    let lap_h = rough_laplacian_sym2(grid, g, h);
    let hess_tr = hessian(grid, g, &tr_h);
    let curv_h = lichnerowicz_curvature_term(grid, g, h);
    let hess_v = hessian(grid, g, v);
    let lap_v = laplacian(grid, g, v);
    let ddh = double_divergence(grid, g, h);
    let lap_tr = laplacian(grid, g, &tr_h);

    let lap_h_h = inner_sym2(g, &lap_h, h);
    let hess_tr_h = inner_sym2(g, &hess_tr, h);
    let curv_h_h = inner_sym2(g, &curv_h, h);
    let hess_v_h = inner_sym2(g, &hess_v, h);

    let n = bg.n_nodes();
    let mut vals = vec![0.0; n];
    for k in 0..n {
        let gi = g.inv(k);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let hm = h.mat(k);
        // <grad(div h), h> with the symmetric part of nabla_i (div h)_j
        let mut ndiv_h = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut hup = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        hup += ginv[i][a] * ginv[j][b] * hm[a][b];
                    }
                }
                ndiv_h += ndiv[k][i][j] * hup;
            }
        }
        let th = 0.5 * tr_h.vals[k];
        let vv = v.vals[k];
        let first = b2 * (nn - 2.0) * ((nn - 1.0) * (th + vv) - 2.0 * tr_h.vals[k]) * (th + vv);
        let second = -ndiv_h + 0.5 * lap_h_h.vals[k] + 0.5 * hess_tr_h.vals[k] + curv_h_h.vals[k];
        let third = hess_v_h.vals[k] - tr_h.vals[k] * lap_v.vals[k]
            + (ddh.vals[k] - lap_tr.vals[k]) * (th + vv);
        let fourth = b2
            * (nn - 2.0)
            * ((nn - 3.0) / 2.0 * (tr_hp.vals[k] - h2.vals[k]) + 2.0 * (nn - 1.0) * xprime.v.vals[k]);
        vals[k] = first + second + third + fourth;
    }
    bg.b_inf * integrate(grid, &ScalarField { vals }, g)
}

/// Tangency residual at the base pair relative to its natural scale.
fn base_tangency(bg: &BackgroundData, x: &TangentPair) -> f64 {
    functionals::tangency_residual(bg, &bg.base_pair(), x)
}

/// Second variation of R for a transverse-traceless h and mean-zero v,
/// along a constraint-preserving path:
/// (2-n) R'' = -b int { <L h, h> / (2(n-2)) - 6 b^2 v^2 }.
/// Returns R'' itself.
pub fn sv_transverse_traceless(
    bg: &BackgroundData,
    h: &SymTensorField,
    v: &ScalarField,
) -> Result<f64, LinearizeError> {
    let grid = &bg.grid;
    let g = &bg.gbar;
    let div = divergence_sym2_oneform(grid, g, h);
    let div_norm: f64 = {
        let mut acc = 0.0;
        for k in 0..h.len() {
            let gi = g.inv(k);
            acc += (gi[0] * div[k][0] * div[k][0]
                + 2.0 * gi[1] * div[k][0] * div[k][1]
                + gi[2] * div[k][1] * div[k][1])
                * grid.quad_weights()[k] * g.sqrt_det(k) / grid.ref_density()[k];
        }
        acc.sqrt()
    };
    let tr_norm = l2_norm_scalar(grid, g, &trace(g, h));
    let scale = l2_norm_sym2(grid, g, h).max(1e-14);
    if div_norm > 1e-8 * scale.max(1.0) || tr_norm > 1e-8 * scale.max(1.0) {
        return Err(LinearizeError::NotTransverseTraceless {
            div: div_norm,
            tr: tr_norm,
        });
    }
    let x = TangentPair { h: h.clone(), v: v.clone() };
    let tres = base_tangency(bg, &x);
    if tres.abs() > 1e-8 * bg.vol_target() {
        return Err(LinearizeError::NotTangent(tres));
    }
    let lh = lichnerowicz(grid, g, h);
    let lh_h = inner_sym2(g, &lh, h);
    let nn = bg.n as f64;
    let vals: Vec<f64> = (0..bg.n_nodes())
        .map(|k| {
            lh_h.vals[k] / (2.0 * (nn - 2.0)) - 6.0 * bg.b_inf * bg.b_inf * v.vals[k] * v.vals[k]
        })
        .collect();
    let integral = integrate(grid, &ScalarField { vals }, g);
    Ok(-bg.b_inf * integral / (2.0 - nn))
}

/// Second variation of R for a conformal variation (phi gbar, v) tangent to
/// the constraint: (2-n) R'' = b int { (n-3)/2 phi [Lap phi + (n-1) b^2 phi]
/// + 2(n-1) b^2 phi v + phi Lap v + v Lap phi + 6 b^2 v^2 }. Returns R''.
pub fn sv_conformal(
    bg: &BackgroundData,
    phi: &ScalarField,
    v: &ScalarField,
) -> Result<f64, LinearizeError> {
    let x = TangentPair {
        h: bg.gbar.comp.mul_scalar_field(phi),
        v: v.clone(),
    };
    let tres = base_tangency(bg, &x);
    if tres.abs() > 1e-8 * bg.vol_target() {
        return Err(LinearizeError::NotTangent(tres));
    }
    let grid = &bg.grid;
    let g = &bg.gbar;
    let nn = bg.n as f64;
    let b2 = bg.b_inf * bg.b_inf;
    let lap_phi = laplacian(grid, g, phi);
    let lap_v = laplacian(grid, g, v);
    let vals: Vec<f64> = (0..bg.n_nodes())
        .map(|k| {
            let p = phi.vals[k];
            let w = v.vals[k];
            (nn - 3.0) / 2.0 * p * (lap_phi.vals[k] + (nn - 1.0) * b2 * p)
                + 2.0 * (nn - 1.0) * b2 * p * w
                + p * lap_v.vals[k]
                + w * lap_phi.vals[k]
                + 6.0 * b2 * w * w
        })
        .collect();
    let integral = integrate(grid, &ScalarField { vals }, g);
    Ok(bg.b_inf * integral / (2.0 - nn))
}

/// The symmetric 2x2 block operator acting on pairs of functions (phi, v)
/// whose quadratic form reproduces the conformal second variation:
/// [[ (n-3)/2 (Lap + (n-1) b^2),  Lap + (n-1) b^2 ],
///  [ Lap + (n-1) b^2,            6 b^2           ]].
pub struct ConformalBlock<'a> {
    bg: &'a BackgroundData,
}

impl<'a> ConformalBlock<'a> {
    pub fn new(bg: &'a BackgroundData) -> Self {
        ConformalBlock { bg }
    }

    pub fn apply(&self, phi: &ScalarField, v: &ScalarField) -> (ScalarField, ScalarField) {
        let bg = self.bg;
        let g = &bg.gbar;
        let nn = bg.n as f64;
        let b2 = bg.b_inf * bg.b_inf;
        let lap_phi = laplacian(&bg.grid, g, phi);
        let lap_v = laplacian(&bg.grid, g, v);
        let n = bg.n_nodes();
        let mut out1 = vec![0.0; n];
        let mut out2 = vec![0.0; n];
        for k in 0..n {
            let aphi = lap_phi.vals[k] + (nn - 1.0) * b2 * phi.vals[k];
            let av = lap_v.vals[k] + (nn - 1.0) * b2 * v.vals[k];
            out1[k] = (nn - 3.0) / 2.0 * aphi + av;
            out2[k] = aphi + 6.0 * b2 * v.vals[k];
        }
        (ScalarField { vals: out1 }, ScalarField { vals: out2 })
    }

    /// Determinant of the principal-symbol matrix [[ (n-3)/2, 1 ], [1, 0]].
    pub fn symbol_determinant(&self) -> f64 {
        let nn = self.bg.n as f64;
        (nn - 3.0) / 2.0 * 0.0 - 1.0
    }

    /// Quadratic form int (phi, v) . L(phi, v) dmu_gbar.
    pub fn quadratic_form(&self, phi: &ScalarField, v: &ScalarField) -> f64 {
        let (l1, l2) = self.apply(phi, v);
        let integrand = ScalarField {
            vals: (0..phi.len())
                .map(|k| phi.vals[k] * l1.vals[k] + v.vals[k] * l2.vals[k])
                .collect(),
        };
        integrate(&self.bg.grid, &integrand, &self.bg.gbar)
    }
}

/// Counterclockwise rotation of a contravariant vector by 90 degrees.
pub fn rotate_vec(g: &MetricField, v: &VectorField) -> VectorField {
    let n = g.len();
    let mut out = VectorField::zeros(n);
    for k in 0..n {
        let gm = g.comp.mat(k);
        let sd = g.sqrt_det(k);
        let a = v.vals[k];
        out.vals[k][0] = -(gm[1][0] * a[0] + gm[1][1] * a[1]) / sd;
        out.vals[k][1] = (gm[0][0] * a[0] + gm[0][1] * a[1]) / sd;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    TransverseTraceless,
    Conformal,
    Diffeo,
}

/// An ordered, labeled basis of constraint-tangent variations. Conformal and
/// transverse-traceless elements are orthonormalized; gauge elements are kept
/// as pure Lie-derivative directions with their generating fields stored.
pub struct VariationBasis {
    pub elements: Vec<TangentPair>,
    pub labels: Vec<BasisLabel>,
    pub generators: Vec<Option<VectorField>>,
    pub gram: DMatrix<f64>,
    pub harmonic_degree: usize,
}

impl VariationBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Indices of the non-gauge (conformal + transverse-traceless) elements.
    pub fn restricted_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.labels[i] != BasisLabel::Diffeo)
            .collect()
    }

    pub fn count(&self, label: BasisLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Linear combination of basis elements.
    pub fn combine(&self, coeffs: &[f64]) -> TangentPair {
        let n = self.elements[0].h.len();
        let mut out = TangentPair::zeros(n);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            if *c != 0.0 {
                out = out.axpy(*c, e);
            }
        }
        out
    }
}

/// Builds the labeled basis from spherical harmonics up to the given degree:
/// conformal pairs (Y gbar, 0) and (0, Y) projected to the constraint and
/// orthonormalized, candidate transverse-traceless residuals (empty on the
/// 2-sphere, where no nonzero TT tensors exist), and gauge directions
/// (L_V gbar, 0) for gradient and rotational potentials of degree >= 2.
pub fn build_basis(bg: &BackgroundData, l_max: usize) -> Result<VariationBasis, LinearizeError> {
    let grid = &bg.grid;
    let n = bg.n_nodes();
    let nn1 = bg.n as f64 - 1.0; // cross-section dimension
    let mut elements: Vec<TangentPair> = Vec::new();
    let mut labels = Vec::new();
    let mut generators: Vec<Option<VectorField>> = Vec::new();

    // Conformal block. The constant modes couple through the constraint:
    // (gbar, -(n-1)/2) is the tangent scaling direction.
    let scaling = TangentPair {
        h: bg.gbar.comp.clone(),
        v: ScalarField::constant(n, -nn1 / 2.0),
    };
    elements.push(scaling);
    labels.push(BasisLabel::Conformal);
    generators.push(None);
    for &idx in &harmonics::enumerate(1, l_max) {
        let y = harmonic(grid, idx);
        elements.push(TangentPair {
            h: bg.gbar.comp.mul_scalar_field(&y),
            v: ScalarField::zeros(n),
        });
        labels.push(BasisLabel::Conformal);
        generators.push(None);
        elements.push(TangentPair {
            h: SymTensorField::zeros(n),
            v: y,
        });
        labels.push(BasisLabel::Conformal);
        generators.push(None);
    }
    // Orthonormalize the conformal block.
    let mut ortho: Vec<TangentPair> = Vec::new();
    for e in &elements {
        let mut r = e.clone();
        for q in &ortho {
            let c = l2_inner(bg, &r, q);
            r = r.axpy(-c, q);
        }
        let norm = l2_norm(bg, &r);
        if norm > 1e-10 {
            ortho.push(r.scale(1.0 / norm));
        }
    }
    let n_conf = ortho.len();
    let mut elements: Vec<TangentPair> = ortho;
    let mut labels: Vec<BasisLabel> = vec![BasisLabel::Conformal; n_conf];
    let mut generators: Vec<Option<VectorField>> = vec![None; n_conf];

    // Transverse-traceless candidates: trace-free combinations orthogonal to
    // the conformal-Killing range. On S^2 the nullspace is empty; the search
    // is kept so the construction reports whatever the geometry provides.
    let tt = tt_candidates(bg, l_max);
    for h in tt {
        let norm = l2_norm_sym2(grid, &bg.gbar, &h);
        if norm > 1e-6 {
            elements.push(TangentPair {
                h: h.scale(1.0 / norm),
                v: ScalarField::zeros(n),
            });
            labels.push(BasisLabel::TransverseTraceless);
            generators.push(None);
        }
    }

    // Gauge block: degree >= 2 potentials (degree-1 gradients are conformal
    // directions already spanned above; degree-1 rotations are Killing).
    for &idx in &harmonics::enumerate(2, l_max) {
        let y = harmonic(grid, idx);
        let grad = gradient(grid, &bg.gbar, &y);
        for v in [grad.clone(), rotate_vec(&bg.gbar, &grad)] {
            let lie = lie_derivative_metric(grid, &bg.gbar, &v);
            let pair = TangentPair { h: lie, v: ScalarField::zeros(n) };
            let norm = l2_norm(bg, &pair);
            if norm > 1e-8 {
                elements.push(pair.scale(1.0 / norm));
                labels.push(BasisLabel::Diffeo);
                generators.push(Some(v.scale(1.0 / norm)));
            }
        }
    }

    // Gram matrix; must be positive definite for a usable basis.
    let dim = elements.len();
    let mut gram = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = l2_inner(bg, &elements[i], &elements[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= 1e-10 {
        return Err(LinearizeError::GramNotPd(min_eig));
    }

    // Constraint tangency of every element.
    for e in &elements {
        let res = base_tangency(bg, e);
        if res.abs() > 1e-10 * bg.vol_target() {
            return Err(LinearizeError::NotTangent(res));
        }
    }

    Ok(VariationBasis {
        elements,
        labels,
        generators,
        gram,
        harmonic_degree: l_max,
    })
}

/// Trace-free candidates orthogonal to the conformal-Killing range: the
/// near-null directions of the Gram form ||delta h||^2 + ||Tr h||^2 over a
/// trace-free generator set.
fn tt_candidates(bg: &BackgroundData, l_max: usize) -> Vec<SymTensorField> {
    let grid = &bg.grid;
    let g = &bg.gbar;
    let mut gens: Vec<SymTensorField> = Vec::new();
    for &idx in &harmonics::enumerate(2, l_max) {
        let y = harmonic(grid, idx);
        // trace-free Hessian and its rotated partner
        let hy = hessian(grid, g, &y);
        let tr = trace(g, &hy);
        let mut tf = hy.clone();
        for k in 0..bg.n_nodes() {
            for c in 0..3 {
                tf.vals[k][c] -= tr.vals[k] / 2.0 * g.comp.vals[k][c];
            }
        }
        gens.push(tf);
        let grad = gradient(grid, g, &y);
        let rot = rotate_vec(g, &grad);
        let lie = lie_derivative_metric(grid, g, &rot);
        let tr2 = trace(g, &lie);
        let mut tf2 = lie.clone();
        for k in 0..bg.n_nodes() {
            for c in 0..3 {
                tf2.vals[k][c] -= tr2.vals[k] / 2.0 * g.comp.vals[k][c];
            }
        }
        gens.push(tf2);
    }
    if gens.is_empty() {
        return Vec::new();
    }
    // Quadratic form Q(c) = ||delta(sum c h)||^2; its near-null vectors within
    // the generator span (modulo norm) are divergence-free and trace-free.
    let m = gens.len();
    let mut qmat = DMatrix::zeros(m, m);
    let mut nmat = DMatrix::zeros(m, m);
    let divs: Vec<Vec<[f64; 2]>> = gens
        .iter()
        .map(|h| divergence_sym2_oneform(grid, g, h))
        .collect();
    for i in 0..m {
        for j in i..m {
            let mut acc = 0.0;
            for k in 0..bg.n_nodes() {
                let gi = g.inv(k);
                let w = grid.quad_weights()[k] * g.sqrt_det(k) / grid.ref_density()[k];
                acc += w
                    * (gi[0] * divs[i][k][0] * divs[j][k][0]
                        + gi[1] * (divs[i][k][0] * divs[j][k][1] + divs[i][k][1] * divs[j][k][0])
                        + gi[2] * divs[i][k][1] * divs[j][k][1]);
            }
            qmat[(i, j)] = acc;
            qmat[(j, i)] = acc;
            let ip = integrate(grid, &inner_sym2(g, &gens[i], &gens[j]), g);
            nmat[(i, j)] = ip;
            nmat[(j, i)] = ip;
        }
    }
    // Generalized near-null: solve with the norm Gram as the scale.
    let eig = qmat.symmetric_eigen();
    let mut out = Vec::new();
    let qmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(1e-30);
    for (col, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < 1e-10 * qmax {
            let coeffs: Vec<f64> = (0..m).map(|r| eig.eigenvectors[(r, col)]).collect();
            // require an honest tensor norm so zero combinations are skipped
            let mut norm2 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    norm2 += coeffs[i] * coeffs[j] * nmat[(i, j)];
                }
            }
            if norm2 > 1e-8 {
                let mut h = SymTensorField::zeros(bg.n_nodes());
                for (c, gen) in coeffs.iter().zip(&gens) {
                    h = h.axpy(*c, gen);
                }
                out.push(h);
            }
        }
    }
    out
}

/// Dense matrix of the linearized constrained gradient over a basis.
pub struct OperatorMatrix {
    pub m: DMatrix<f64>,
    pub labels: Vec<BasisLabel>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Relative asymmetry ||M - M^T|| / ||M|| in the Frobenius norm.
    pub fn asymmetry(&self) -> f64 {
        let mt = self.m.transpose();
        (&self.m - &mt).norm() / self.m.norm().max(1e-30)
    }

    /// Spectral radius estimate from the symmetric part.
    pub fn spectral_radius(&self) -> f64 {
        let sym = (&self.m + self.m.transpose()).scale(0.5);
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &l| m.max(l.abs()))
    }

    /// Largest column norm among gauge-labeled columns, relative to the
    /// matrix norm.
    pub fn diffeo_column_residual(&self) -> f64 {
        let scale = self.m.norm().max(1e-30);
        let mut worst = 0.0f64;
        for (j, &lab) in self.labels.iter().enumerate() {
            if lab == BasisLabel::Diffeo {
                let col = self.m.column(j).norm();
                let row = self.m.row(j).norm();
                worst = worst.max(col).max(row);
            }
        }
        worst / scale
    }

    /// Frobenius norm of the TT-vs-rest off-diagonal blocks, relative to the
    /// matrix norm. Zero when the TT label is empty.
    pub fn tt_offdiagonal_residual(&self) -> f64 {
        let scale = self.m.norm().max(1e-30);
        let mut acc = 0.0;
        for (i, &li) in self.labels.iter().enumerate() {
            for (j, &lj) in self.labels.iter().enumerate() {
                let ott = (li == BasisLabel::TransverseTraceless)
                    != (lj == BasisLabel::TransverseTraceless);
                if ott {
                    acc += self.m[(i, j)] * self.m[(i, j)];
                }
            }
        }
        acc.sqrt() / scale
    }

    /// Row-major CSV with one header line of basis labels.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<&str> = self
            .labels
            .iter()
            .map(|l| match l {
                BasisLabel::TransverseTraceless => "tt",
                BasisLabel::Conformal => "conformal",
                BasisLabel::Diffeo => "diffeo",
            })
            .collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for i in 0..self.m.nrows() {
            let row: Vec<String> = (0..self.m.ncols())
                .map(|j| format!("{:.17e}", self.m[(i, j)]))
                .collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Assembles <L e_i, e_j> by Richardson finite differences of the
/// constrained gradient along renormalized-chart paths through each basis
/// direction.
pub fn assemble_l(
    bg: &BackgroundData,
    basis: &VariationBasis,
) -> Result<OperatorMatrix, LinearizeError> {
    let dim = basis.dim();
    let n = bg.n_nodes();
    let mut mat = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let e = &basis.elements[i];
        let mut flat = |t: f64| -> Vec<f64> {
            let p = exp_chart(bg, &e.scale(t)).expect("basis step inside guard");
            let g1 = project_gradient(bg, &p).expect("gradient inside guard");
            let mut out = Vec::with_capacity(4 * n);
            for k in 0..n {
                out.extend_from_slice(&g1.h.vals[k]);
                out.push(g1.v.vals[k]);
            }
            out
        };
        let col = fd::deriv1_vec(&mut flat, fd::STEP_COARSE, fd::STEP_FINE);
        let mut hcol = SymTensorField::zeros(n);
        let mut vcol = ScalarField::zeros(n);
        for k in 0..n {
            hcol.vals[k] = [col[4 * k], col[4 * k + 1], col[4 * k + 2]];
            vcol.vals[k] = col[4 * k + 3];
        }
        let lcol = TangentPair { h: hcol, v: vcol };
        for j in 0..dim {
            mat[(j, i)] = l2_inner(bg, &lcol, &basis.elements[j]);
        }
    }
    Ok(OperatorMatrix {
        m: mat,
        labels: basis.labels.clone(),
    })
}

/// Near-kernel of the operator restricted to the non-gauge block:
/// eigenvectors with |lambda| below threshold times the spectral radius,
/// returned as coefficient vectors over the restricted index set.
pub struct KernelBasis {
    pub restricted: Vec<usize>,
    pub vectors: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    pub spectral_radius: f64,
}

pub fn kernel_of_l(op: &OperatorMatrix, threshold: f64) -> KernelBasis {
    let restricted: Vec<usize> = (0..op.labels.len())
        .filter(|&i| op.labels[i] != BasisLabel::Diffeo)
        .collect();
    let r = restricted.len();
    let mut sub = DMatrix::zeros(r, r);
    for (a, &i) in restricted.iter().enumerate() {
        for (b, &j) in restricted.iter().enumerate() {
            sub[(a, b)] = 0.5 * (op.m[(i, j)] + op.m[(j, i)]);
        }
    }
    let eig = sub.symmetric_eigen();
    let rad = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let mut vectors = Vec::new();
    let mut eigenvalues = Vec::new();
    for (col, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= threshold * rad {
            vectors.push(DVector::from_iterator(
                r,
                (0..r).map(|row| eig.eigenvectors[(row, col)]),
            ));
            eigenvalues.push(lam);
        }
    }
    // deterministic order: by eigenvalue magnitude
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[a]
            .abs()
            .partial_cmp(&eigenvalues[b].abs())
            .unwrap()
    });
    KernelBasis {
        restricted,
        vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
        eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
        spectral_radius: rad,
    }
}

/// York-type split h = h_tt + phi gbar + L_V gbar. The gauge part is fitted
/// over harmonic potentials by least squares on the trace-free part; the
/// conformal function absorbs the remaining trace. The returned delta
/// residual ||div h_tt|| reports how well the basis covered the input.
pub struct YorkSplit {
    pub h_tt: SymTensorField,
    pub phi: ScalarField,
    pub v: VectorField,
    pub delta_residual: f64,
    pub reconstruction_residual: f64,
}

pub fn york_decompose(
    bg: &BackgroundData,
    h: &SymTensorField,
    l_max: usize,
    delta_tol: f64,
) -> Result<YorkSplit, LinearizeError> {
    let grid = &bg.grid;
    let g = &bg.gbar;
    let n = bg.n_nodes();
    let d = bg.n as f64 - 1.0;
    let tr_h = trace(g, h);
    let mut h0 = h.clone();
    for k in 0..n {
        for c in 0..3 {
            h0.vals[k][c] -= tr_h.vals[k] / d * g.comp.vals[k][c];
        }
    }
    // Conformal-Killing images of the potential basis.
    let mut vs: Vec<VectorField> = Vec::new();
    let mut cks: Vec<SymTensorField> = Vec::new();
    for &idx in &harmonics::enumerate(1, l_max) {
        let y = harmonic(grid, idx);
        let grad = gradient(grid, g, &y);
        for v in [grad.clone(), rotate_vec(g, &grad)] {
            let lie = lie_derivative_metric(grid, g, &v);
            let tr = trace(g, &lie);
            let mut ck = lie.clone();
            for k in 0..n {
                for c in 0..3 {
                    ck.vals[k][c] -= tr.vals[k] / d * g.comp.vals[k][c];
                }
            }
            vs.push(v);
            cks.push(ck);
        }
    }
    let m = cks.len();
    let mut gmat = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for i in 0..m {
        for j in i..m {
            let ip = integrate(grid, &inner_sym2(g, &cks[i], &cks[j]), g);
            gmat[(i, j)] = ip;
            gmat[(j, i)] = ip;
        }
        rhs[i] = integrate(grid, &inner_sym2(g, &cks[i], &h0), g);
    }
    // Minimum-norm solve through the eigendecomposition (Killing and
    // conformal-Killing potentials give null columns).
    let eig = gmat.symmetric_eigen();
    let lmax_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(1e-30);
    let mut coeffs = DVector::zeros(m);
    let proj = eig.eigenvectors.transpose() * &rhs;
    for k in 0..m {
        if eig.eigenvalues[k] > 1e-12 * lmax_eig {
            let scale = proj[k] / eig.eigenvalues[k];
            for r in 0..m {
                coeffs[r] += scale * eig.eigenvectors[(r, k)];
            }
        }
    }
    let mut v = VectorField::zeros(n);
    let mut ck_sum = SymTensorField::zeros(n);
    let mut lie_sum = SymTensorField::zeros(n);
    for (c, (vf, ck)) in coeffs.iter().zip(vs.iter().zip(&cks)) {
        if *c != 0.0 {
            v = v.add(&vf.scale(*c));
            ck_sum = ck_sum.axpy(*c, ck);
        }
    }
    if v.max_abs() > 0.0 {
        lie_sum = lie_derivative_metric(grid, g, &v);
    }
    let h_tt = h0.sub(&ck_sum);
    // phi absorbs Tr h and the trace of the gauge part.
    let div_v = trace(g, &lie_sum); // = 2 div V
    let phi = ScalarField {
        vals: (0..n)
            .map(|k| (tr_h.vals[k] - div_v.vals[k]) / d)
            .collect(),
    };
    // residuals
    let div_tt = divergence_sym2_oneform(grid, g, &h_tt);
    let mut dres = 0.0;
    for k in 0..n {
        let gi = g.inv(k);
        let w = grid.quad_weights()[k] * g.sqrt_det(k) / grid.ref_density()[k];
        dres += w
            * (gi[0] * div_tt[k][0] * div_tt[k][0]
                + 2.0 * gi[1] * div_tt[k][0] * div_tt[k][1]
                + gi[2] * div_tt[k][1] * div_tt[k][1]);
    }
    let dres = dres.sqrt();
    let scale = l2_norm_sym2(grid, g, h).max(1e-14);
    if dres > delta_tol * scale.max(1.0) {
        return Err(LinearizeError::BasisTooSmall(dres));
    }
    let mut recon = SymTensorField::zeros(n);
    for k in 0..n {
        for c in 0..3 {
            recon.vals[k][c] =
                h_tt.vals[k][c] + phi.vals[k] * g.comp.vals[k][c] + lie_sum.vals[k][c];
        }
    }
    let rres = l2_norm_sym2(grid, g, &recon.sub(h)) / scale;
    Ok(YorkSplit {
        h_tt,
        phi,
        v,
        delta_residual: dres,
        reconstruction_residual: rres,
    })
}

/// Convenience: the weighted pair reached by the chart along a basis combination.
pub fn pair_from_coords(
    bg: &BackgroundData,
    basis: &VariationBasis,
    coords: &[f64],
) -> Result<WeightedPair, FunctionalError> {
    exp_chart(bg, &basis.combine(coords))
}

/// Quadratic second finite difference of R composed with the chart along a
/// fixed tangent direction and second-order data, used as the oracle for the
/// closed-form second-variation formulas.
pub fn fd_second_variation_r(
    bg: &BackgroundData,
    x: &TangentPair,
    xprime: &TangentPair,
) -> f64 {
    let mut f = |t: f64| -> f64 {
        let h = x.h.scale(t).axpy(0.5 * t * t, &xprime.h);
        let comp = bg.gbar.comp.add(&h);
        let g = MetricField::new(&bg.grid, comp).expect("path metric degenerate");
        let w = WeightField::new(
            (0..bg.n_nodes())
                .map(|k| bg.b_inf * (t * x.v.vals[k] + t * t * xprime.v.vals[k]).exp())
                .collect(),
        )
        .expect("path weight degenerate");
        functionals::eval_r(bg, &WeightedPair { g, w })
    };
    fd::deriv2(&mut f)
}

pub fn fd_second_variation_a(bg: &BackgroundData, x: &TangentPair, xprime: &TangentPair) -> f64 {
    let mut f = |t: f64| -> f64 {
        let h = x.h.scale(t).axpy(0.5 * t * t, &xprime.h);
        let comp = bg.gbar.comp.add(&h);
        let g = MetricField::new(&bg.grid, comp).expect("path metric degenerate");
        let w = WeightField::new(
            (0..bg.n_nodes())
                .map(|k| bg.b_inf * (t * x.v.vals[k] + t * t * xprime.v.vals[k]).exp())
                .collect(),
        )
        .expect("path weight degenerate");
        functionals::eval_a(bg, &WeightedPair { g, w })
    };
    fd::deriv2(&mut f)
}

pub fn fd_second_variation_b(bg: &BackgroundData, x: &TangentPair, xprime: &TangentPair) -> f64 {
    let mut f = |t: f64| -> f64 {
        let h = x.h.scale(t).axpy(0.5 * t * t, &xprime.h);
        let comp = bg.gbar.comp.add(&h);
        let g = MetricField::new(&bg.grid, comp).expect("path metric degenerate");
        let w = WeightField::new(
            (0..bg.n_nodes())
                .map(|k| bg.b_inf * (t * x.v.vals[k] + t * t * xprime.v.vals[k]).exp())
                .collect(),
        )
        .expect("path weight degenerate");
        functionals::eval_b(bg, &WeightedPair { g, w })
    };
    fd::deriv2(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::rel_err;
    use crate::functionals::{eval_a1, eval_r, tangency_residual};
    use crate::grid::Grid;
    use crate::harmonics::{random_band_scalar, random_band_sym2, Azimuth, HarmonicIndex};
    use crate::rng::Rng;

    fn background() -> BackgroundData {
        BackgroundData::new(Grid::sphere(24, 48).unwrap(), 3, 1.0).unwrap()
    }

    fn make_tangent(bg: &BackgroundData, rng: &mut Rng, amp: f64) -> TangentPair {
        let mut x = TangentPair {
            h: random_band_sym2(&bg.grid, &bg.g0, 3, rng, amp),
            v: random_band_scalar(&bg.grid, 3, rng, amp),
        };
        let resid = tangency_residual(bg, &bg.base_pair(), &x);
        let vol = eval_a1(bg, &bg.base_pair());
        for v in x.v.vals.iter_mut() {
            *v -= resid / (bg.b_inf * vol);
        }
        x
    }

    #[test]
    fn second_variations_match_fd() {
        let bg = background();
        let mut rng = Rng::seeded(71);
        for trial in 0..6 {
            let x = make_tangent(&bg, &mut rng, 0.05);
            let xp = TangentPair {
                h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
                v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
            };
            let a2 = second_variation_a(&bg, &x, &xp);
            let fa = fd_second_variation_a(&bg, &x, &xp);
            assert!(rel_err(a2, fa) < 1e-5, "trial {trial} A'': {a2} vs {fa}");
            let b2 = second_variation_b(&bg, &x, &xp);
            let fb = fd_second_variation_b(&bg, &x, &xp);
            assert!(rel_err(b2, fb) < 1e-5, "trial {trial} B'': {b2} vs {fb}");
        }
        // zero variation
        let z = TangentPair::zeros(bg.n_nodes());
        assert_eq!(second_variation_a(&bg, &z, &z), 0.0);
        assert_eq!(second_variation_b(&bg, &z, &z), 0.0);
    }

    #[test]
    fn pure_scaling_closed_form() {
        // h = c gbar, v = -c (tangent), h' = v' = 0: A'' = 3 c^2 b^3 Vol.
        let bg = background();
        let c = 0.23;
        let x = TangentPair {
            h: bg.gbar.comp.scale(c),
            v: ScalarField::constant(bg.n_nodes(), -c),
        };
        let z = TangentPair::zeros(bg.n_nodes());
        let a2 = second_variation_a(&bg, &x, &z);
        let expect = 3.0 * c * c * bg.b_inf.powi(3) * 4.0 * std::f64::consts::PI;
        assert!(rel_err(a2, expect) < 1e-10, "{a2} vs {expect}");
    }

    #[test]
    fn tt_second_variation_v_only() {
        let bg = background();
        let mut rng = Rng::seeded(73);
        for _ in 0..3 {
            let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.1);
            // mean-zero v so (0, v) is tangent
            let mean = integrate(&bg.grid, &v, &bg.gbar) / (4.0 * std::f64::consts::PI);
            for val in v.vals.iter_mut() {
                *val -= mean;
            }
            let h = SymTensorField::zeros(bg.n_nodes());
            let r2 = sv_transverse_traceless(&bg, &h, &v).unwrap();
            // (2-n) R'' = 6 b^3 int v^2
            let int_v2 = integrate(&bg.grid, &v.mul(&v), &bg.gbar);
            let expect = 6.0 * bg.b_inf.powi(3) * int_v2 / (2.0 - bg.n as f64);
            assert!(rel_err(r2, expect) < 1e-10);
            // FD along the renormalized chart path
            let mut f = |t: f64| eval_r(&bg, &exp_chart(&bg, &TangentPair { h: h.clone(), v: v.clone() }.scale(t)).unwrap());
            let fd2 = fd::deriv2(&mut f);
            assert!(rel_err(r2, fd2) < 1e-5, "{r2} vs {fd2}");
        }
        // non-TT h is rejected
        let bad = bg.gbar.comp.scale(0.1);
        assert!(matches!(
            sv_transverse_traceless(&bg, &bad, &ScalarField::zeros(bg.n_nodes())),
            Err(LinearizeError::NotTransverseTraceless { .. })
        ));
    }

    #[test]
    fn tt_quadratic_form_is_dirichlet_on_torus() {
        // On the flat backend the operator reduces to the rough Laplacian and
        // its quadratic form to a Dirichlet energy.
        let grid = Grid::torus(16, 16, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)
            .unwrap();
        let g = crate::geometry::flat_torus_metric(&grid, [1.0, 0.0, 1.0]).unwrap();
        let h = SymTensorField::from_fn(&grid, |x, y| {
            let f = (x).cos() + (y).sin();
            [0.3 * f, 0.1 * (x + y).cos(), -0.3 * f]
        });
        let lh = lichnerowicz(&grid, &g, &h);
        let qf = integrate(&grid, &inner_sym2(&g, &lh, &h), &g);
        let nh = crate::geometry::cov_deriv_sym2(&grid, &g, &h);
        let dirichlet = integrate(&grid, &crate::geometry::inner_rank3(&g, &nh, &nh), &g);
        assert!(
            (qf + dirichlet).abs() < 1e-8 * dirichlet.abs().max(1.0),
            "{qf} vs {dirichlet}"
        );
    }

    #[test]
    fn conformal_second_variation() {
        let bg = background();
        let mut rng = Rng::seeded(79);
        for _ in 0..3 {
            // tangent conformal pair: int ((n-1)/2 phi + v) = 0
            let phi = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
            let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
            let lhs = integrate(
                &bg.grid,
                &ScalarField {
                    vals: (0..bg.n_nodes())
                        .map(|k| (bg.n as f64 - 1.0) / 2.0 * phi.vals[k] + v.vals[k])
                        .collect(),
                },
                &bg.gbar,
            );
            let vol = 4.0 * std::f64::consts::PI;
            for val in v.vals.iter_mut() {
                *val -= lhs / vol;
            }
            let r2 = sv_conformal(&bg, &phi, &v).unwrap();
            // FD along exp path with h = phi gbar (linear), v fixed
            let x = TangentPair {
                h: bg.gbar.comp.mul_scalar_field(&phi),
                v: v.clone(),
            };
            let mut f = |t: f64| eval_r(&bg, &exp_chart(&bg, &x.scale(t)).unwrap());
            let fd2 = fd::deriv2(&mut f);
            assert!(rel_err(r2, fd2) < 1e-5, "conformal: {r2} vs {fd2}");
            // phi = 0 reduces to the v-only transverse-traceless value
            let r2v = sv_conformal(&bg, &ScalarField::zeros(bg.n_nodes()), {
                let mut v0 = v.clone();
                let mean = integrate(&bg.grid, &v0, &bg.gbar) / vol;
                for val in v0.vals.iter_mut() {
                    *val -= mean;
                }
                &v0.clone()
            })
            .unwrap();
            let ttv = sv_transverse_traceless(&bg, &SymTensorField::zeros(bg.n_nodes()), &{
                let mut v0 = v.clone();
                let mean = integrate(&bg.grid, &v0, &bg.gbar) / vol;
                for val in v0.vals.iter_mut() {
                    *val -= mean;
                }
                v0
            })
            .unwrap();
            assert!(rel_err(r2v, ttv) < 1e-9);
        }
    }

    #[test]
    fn conformal_block_matches_quadratic_form() {
        let bg = background();
        let block = ConformalBlock::new(&bg);
        assert_eq!(block.symbol_determinant(), -1.0);
        let mut rng = Rng::seeded(83);
        for _ in 0..10 {
            let phi = random_band_scalar(&bg.grid, 3, &mut rng, 0.1);
            let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.1);
            let vol = 4.0 * std::f64::consts::PI;
            let lhs = integrate(
                &bg.grid,
                &ScalarField {
                    vals: (0..bg.n_nodes())
                        .map(|k| (bg.n as f64 - 1.0) / 2.0 * phi.vals[k] + v.vals[k])
                        .collect(),
                },
                &bg.gbar,
            );
            for val in v.vals.iter_mut() {
                *val -= lhs / vol;
            }
            let qf = block.quadratic_form(&phi, &v);
            let sv = sv_conformal(&bg, &phi, &v).unwrap();
            // b * qf = (2 - n) * sv
            let lhs2 = bg.b_inf * qf;
            let rhs2 = (2.0 - bg.n as f64) * sv;
            assert!(rel_err(lhs2, rhs2) < 1e-6, "{lhs2} vs {rhs2}");
        }
        // constants: closed form from the zero eigenvalue of the Laplacian
        let c1 = 0.7;
        let c2 = -0.4;
        let (l1, l2) = block.apply(
            &ScalarField::constant(bg.n_nodes(), c1),
            &ScalarField::constant(bg.n_nodes(), c2),
        );
        let nn = bg.n as f64;
        let b2 = bg.b_inf * bg.b_inf;
        for k in 0..bg.n_nodes() {
            let e1 = (nn - 3.0) / 2.0 * (nn - 1.0) * b2 * c1 + (nn - 1.0) * b2 * c2;
            let e2 = (nn - 1.0) * b2 * c1 + 6.0 * b2 * c2;
            assert!((l1.vals[k] - e1).abs() < 1e-10);
            assert!((l2.vals[k] - e2).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_structure() {
        let bg = background();
        let basis = build_basis(&bg, 2).unwrap();
        // conformal block: scaling + 2 per nonconstant harmonic (l = 1, 2: 8 harmonics)
        assert_eq!(basis.count(BasisLabel::Conformal), 1 + 2 * 8);
        // no transverse-traceless tensors exist on the 2-sphere
        assert_eq!(basis.count(BasisLabel::TransverseTraceless), 0);
        // diffeo: gradient and rotational potentials of degree 2
        assert_eq!(basis.count(BasisLabel::Diffeo), 10);
        // orthonormal conformal block
        for (i, li) in basis.labels.iter().enumerate() {
            if *li == BasisLabel::Conformal {
                assert!((basis.gram[(i, i)] - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn york_examples() {
        let bg = background();
        let grid = &bg.grid;
        let g = &bg.gbar;
        // pure gauge input
        let y = harmonic(grid, HarmonicIndex { l: 2, m: 1, kind: Azimuth::Cos });
        let vfield = gradient(grid, g, &y);
        let h_gauge = lie_derivative_metric(grid, g, &vfield);
        let split = york_decompose(&bg, &h_gauge, 3, 1e-5).unwrap();
        let scale = l2_norm_sym2(grid, g, &h_gauge);
        assert!(l2_norm_sym2(grid, g, &split.h_tt) < 1e-8 * scale);
        assert!(l2_norm_scalar(grid, g, &split.phi) < 1e-8 * scale);
        assert!(split.reconstruction_residual < 1e-10);
        // pure conformal input
        let h_conf = g.comp.mul_scalar_field(&y);
        let split2 = york_decompose(&bg, &h_conf, 3, 1e-5).unwrap();
        assert!(l2_norm_sym2(grid, g, &split2.h_tt) < 1e-8);
        let phi_err = ScalarField {
            vals: (0..bg.n_nodes())
                .map(|k| split2.phi.vals[k] - y.vals[k])
                .collect(),
        };
        assert!(l2_norm_scalar(grid, g, &phi_err) < 1e-8);
        assert!(split2.reconstruction_residual < 1e-10);
        // mixed random input reconstructs and the residual is orthogonal
        let mut rng = Rng::seeded(89);
        let h = random_band_sym2(grid, &bg.g0, 3, &mut rng, 0.3);
        let split3 = york_decompose(&bg, &h, 4, 1e-5).unwrap();
        assert!(split3.reconstruction_residual < 1e-10);
        // h_tt (here ~0) is orthogonal to both other parts by construction
        let ip1 = integrate(grid, &inner_sym2(g, &split3.h_tt, &g.comp.mul_scalar_field(&split3.phi)), g);
        let lie = lie_derivative_metric(grid, g, &split3.v);
        let ip2 = integrate(grid, &inner_sym2(g, &split3.h_tt, &lie), g);
        let s2 = l2_norm_sym2(grid, g, &h);
        assert!(ip1.abs() < 1e-8 * s2 * s2.max(1.0));
        assert!(ip2.abs() < 1e-8 * s2 * s2.max(1.0));
    }

    #[test]
    fn assembled_operator_structure() {
        let bg = background();
        let basis = build_basis(&bg, 2).unwrap();
        let op = assemble_l(&bg, &basis).unwrap();
        assert!(op.asymmetry() < 1e-6, "asymmetry {}", op.asymmetry());
        assert!(
            op.diffeo_column_residual() < 1e-6,
            "gauge columns {}",
            op.diffeo_column_residual()
        );
        assert_eq!(op.tt_offdiagonal_residual(), 0.0);
        // diagonal entries on conformal elements match the closed-form
        // second variation through the chart
        for (i, &lab) in basis.labels.iter().enumerate() {
            if lab != BasisLabel::Conformal {
                continue;
            }
            let e = &basis.elements[i];
            // e = (h, v) with h = phi gbar exactly for conformal elements
            let phi = trace(&bg.gbar, &e.h).scale(1.0 / (bg.n as f64 - 1.0));
            let sv = sv_conformal(&bg, &phi, &e.v).unwrap();
            assert!(
                (op.m[(i, i)] - sv).abs() < 1e-5 * sv.abs().max(op.spectral_radius() * 1e-3),
                "diagonal {i}: {} vs {sv}",
                op.m[(i, i)]
            );
        }
    }

    #[test]
    fn kernel_extraction() {
        // synthetic block matrix with two exact zero modes
        let labels = vec![BasisLabel::Conformal; 5];
        let mut m = DMatrix::zeros(5, 5);
        for (i, val) in [3.0, 0.0, -2.0, 0.0, 1.5].iter().enumerate() {
            m[(i, i)] = *val;
        }
        let op = OperatorMatrix { m, labels };
        let k = kernel_of_l(&op, 1e-8);
        assert_eq!(k.vectors.len(), 2);
        // strictly invertible matrix with zero threshold: empty kernel
        let mut m2 = DMatrix::zeros(3, 3);
        for i in 0..3 {
            m2[(i, i)] = (i + 1) as f64;
        }
        let op2 = OperatorMatrix {
            m: m2,
            labels: vec![BasisLabel::Conformal; 3],
        };
        assert!(kernel_of_l(&op2, 0.0).vectors.is_empty());
    }
}
