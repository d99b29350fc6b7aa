//! First-variation formulas for geometric quantities under a metric
//! deformation g + t h and function deformation u + t v, each one checkable
//! against a centered finite difference, plus the first- and second-order
//! constraint identities along weighted-volume-preserving paths.

use crate::fields::{MetricField, ScalarField, SymTensorField};
use crate::functionals::{a1_residual, BackgroundData, WeightedPair};
use crate::geometry::{
    cov_deriv_oneform, cov_deriv_sym2, divergence_sym2_oneform, double_divergence, gradient,
    hessian, inner_sym2, inner_vec, integrate, laplacian, lichnerowicz_curvature_term, ricci,
    rough_laplacian_sym2, trace,
};
use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VariationError {
    #[error("path leaves the constraint set at sample {index} (relative residual {resid:.3e})")]
    PathLeavesConstraint { index: usize, resid: f64 },
    #[error("path must be sampled at five symmetric parameters -2e, -e, 0, e, 2e")]
    BadPathGrid,
}

/// d/dt (g + t h)^{ij} at t = 0, i.e. -h^{ij}, returned in contravariant
/// components. Pointwise it equals the matrix product -g^{-1} h g^{-1}.
pub fn dmetric_inverse(g: &MetricField, h: &SymTensorField) -> SymTensorField {
    let n = g.len();
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let hm = h.mat(node);
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc -= ginv[i][a] * hm[a][b] * ginv[b][j];
                    }
                }
                out.vals[node][crate::fields::sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// d/dt |grad(u + t v)|^2_{g + t h} at t = 0: -h(grad u, grad u) + 2 <grad u, grad v>.
pub fn dnorm_gradient(
    grid: &Grid,
    g: &MetricField,
    h: &SymTensorField,
    u: &ScalarField,
    v: &ScalarField,
) -> ScalarField {
    let gu = gradient(grid, g, u);
    let gv = gradient(grid, g, v);
    let n = g.len();
    let mut vals = vec![0.0; n];
    let uv = inner_vec(g, &gu, &gv);
    for node in 0..n {
        let a = gu.vals[node];
        let hm = h.mat(node);
        let h_uu =
            hm[0][0] * a[0] * a[0] + 2.0 * hm[0][1] * a[0] * a[1] + hm[1][1] * a[1] * a[1];
        vals[node] = -h_uu + 2.0 * uv.vals[node];
    }
    ScalarField { vals }
}

/// Density factor of d/dt dmu_{g + t h} at t = 0: Tr_g(h) / 2.
pub fn dvolume_form(g: &MetricField, h: &SymTensorField) -> ScalarField {
    trace(g, h).scale(0.5)
}

/// d/dt R_{g + t h} at t = 0: -<Ric, h> + div div h - Lap Tr(h).
pub fn dscalar_curvature(grid: &Grid, g: &MetricField, h: &SymTensorField) -> ScalarField {
    let ric = ricci(grid, g);
    let ric_h = inner_sym2(g, &ric, h);
    let ddh = double_divergence(grid, g, h);
    let ltr = laplacian(grid, g, &trace(g, h));
    ScalarField {
        vals: (0..g.len())
            .map(|k| -ric_h.vals[k] + ddh.vals[k] - ltr.vals[k])
            .collect(),
    }
}

/// d/dt Ric_{g + t h} at t = 0:
/// (1/2)(nabla_i (div h)_j + nabla_j (div h)_i + Ric_i^k h_{kj} + Ric_j^k h_{ik}
///        - (Delta h)_{ij} - Hess(Tr h)_{ij}) - riem4(i,k,j,l) h^{kl}.
pub fn dricci(grid: &Grid, g: &MetricField, h: &SymTensorField) -> SymTensorField {
    let n = g.len();
    let div_h = divergence_sym2_oneform(grid, g, h);
    let ndiv = cov_deriv_oneform(grid, g, &div_h);
    let ric = ricci(grid, g);
    let lap_h = rough_laplacian_sym2(grid, g, h);
    let hess_tr = hessian(grid, g, &trace(g, h));
    let curv = lichnerowicz_curvature_term(grid, g, h);
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let rm = ric.mat(node);
        let hm = h.mat(node);
        // (Ric . h)_{ij} = Ric_i^k h_{kj} = Ric_{ia} g^{ak} h_{kj}
        let mut rich = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for k in 0..2 {
                        acc += rm[i][a] * ginv[a][k] * hm[k][j];
                    }
                }
                rich[i][j] = acc;
            }
        }
        for i in 0..2 {
            for j in i..2 {
                let sidx = crate::fields::sym_idx(i, j);
                let v = 0.5
                    * (ndiv[node][i][j] + ndiv[node][j][i] + rich[i][j] + rich[j][i]
                        - lap_h.vals[node][sidx]
                        - hess_tr.vals[node][sidx])
                    - curv.vals[node][sidx];
                out.vals[node][sidx] = v;
            }
        }
    }
    out
}

/// d/dt Hess_{g + t h}(u + t v) at t = 0:
/// Hess_v - (1/2)(nabla_i h_{jk} + nabla_j h_{ik} - nabla_k h_{ij}) g^{kl} d_l u.
pub fn dhessian(
    grid: &Grid,
    g: &MetricField,
    h: &SymTensorField,
    u: &ScalarField,
    v: &ScalarField,
) -> SymTensorField {
    let n = g.len();
    let hess_v = hessian(grid, g, v);
    let nh = cov_deriv_sym2(grid, g, h);
    let gu = gradient(grid, g, u); // contravariant
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        for i in 0..2 {
            for j in i..2 {
                let mut acc = hess_v.vals[node][crate::fields::sym_idx(i, j)];
                for k in 0..2 {
                    let dgamma =
                        nh.get(node, i, j, k) + nh.get(node, j, i, k) - nh.get(node, k, i, j);
                    acc -= 0.5 * dgamma * gu.vals[node][k];
                }
                out.vals[node][crate::fields::sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// A one-parameter family of pairs sampled at five symmetric parameters
/// -2e, -e, 0, e, 2e (used to extract first and second derivative data).
pub struct PairPath {
    pub eps: f64,
    pub pairs: [WeightedPair; 5],
}

/// First- and second-order constraint residuals of a constraint-preserving
/// path through the base pair: the integrals
/// `int (Tr h / 2 + v)` and `int ((Tr h / 2 + v)^2 + Tr h' / 2 - |h|^2 / 2 + 2 v')`
/// against the background measure, both zero along exact constraint paths.
/// h, h', v, v' are extracted from the samples by finite differences.
pub fn constraint_derivatives(
    bg: &BackgroundData,
    path: &PairPath,
) -> Result<(f64, f64), VariationError> {
    for (i, p) in path.pairs.iter().enumerate() {
        let resid = a1_residual(bg, p);
        if resid > 1e-10 {
            return Err(VariationError::PathLeavesConstraint { index: i, resid });
        }
    }
    if !(path.eps > 0.0) {
        return Err(VariationError::BadPathGrid);
    }
    let e = path.eps;
    let n = bg.n_nodes();
    let center = &path.pairs[2];

    // g-derivatives: five-point central stencils, O(e^4) for g', O(e^2) for g''.
    let mut h = SymTensorField::zeros(n);
    let mut hp = SymTensorField::zeros(n);
    for k in 0..n {
        for c in 0..3 {
            let s: Vec<f64> = path.pairs.iter().map(|p| p.g.comp.vals[k][c]).collect();
            h.vals[k][c] = (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / (12.0 * e);
            hp.vals[k][c] = (-s[0] + 16.0 * s[1] - 30.0 * s[2] + 16.0 * s[3] - s[4])
                / (12.0 * e * e);
        }
    }
    // log-weight derivatives: v = psi'(0), v' = psi''(0) / 2 for w = w0 e^{psi}.
    let mut v = ScalarField::zeros(n);
    let mut vp = ScalarField::zeros(n);
    for k in 0..n {
        let s: Vec<f64> = path.pairs.iter().map(|p| p.w.vals[k].ln()).collect();
        v.vals[k] = (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / (12.0 * e);
        vp.vals[k] =
            0.5 * (-s[0] + 16.0 * s[1] - 30.0 * s[2] + 16.0 * s[3] - s[4]) / (12.0 * e * e);
    }

    let g = &center.g;
    let tr_h = trace(g, &h);
    let tr_hp = trace(g, &hp);
    let h_norm2 = inner_sym2(g, &h, &h);
    let first = ScalarField {
        vals: (0..n).map(|k| 0.5 * tr_h.vals[k] + v.vals[k]).collect(),
    };
    let second = ScalarField {
        vals: (0..n)
            .map(|k| {
                let a = 0.5 * tr_h.vals[k] + v.vals[k];
                a * a + 0.5 * tr_hp.vals[k] - 0.5 * h_norm2.vals[k] + 2.0 * vp.vals[k]
            })
            .collect(),
    };
    Ok((integrate(&bg.grid, &first, g), integrate(&bg.grid, &second, g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::fields::VectorField;
    use crate::fields::WeightField;
    use crate::functionals::{exp_chart, tangency_residual, TangentPair};
    use crate::geometry::{
        l2_norm_scalar, l2_norm_sym2, lie_derivative_metric, lie_derivative_sym2,
        round_sphere_metric, scalar_curvature,
    };
    use crate::harmonics::{random_band_scalar, random_band_sym2};
    use crate::rng::Rng;

    fn setup() -> (Grid, MetricField) {
        let grid = Grid::sphere(24, 48).unwrap();
        let g0 = round_sphere_metric(&grid, 1.0).unwrap();
        (grid, g0)
    }

    fn metric_along(grid: &Grid, g: &MetricField, h: &SymTensorField, t: f64) -> MetricField {
        MetricField::new(grid, g.comp.axpy(t, h)).unwrap()
    }

    /// Relative error of a tensor field in the L2 norm of g, the norm used by
    /// every downstream consumer of these operators; the two rows adjacent to
    /// each pole are additionally sup-checked at a looser absolute floor.
    fn assert_close_sym2(
        grid: &Grid,
        g: &MetricField,
        got: &SymTensorField,
        want: &[f64],
        label: &str,
    ) {
        let n = grid.n_nodes();
        let mut diff = SymTensorField::zeros(n);
        let mut wfield = SymTensorField::zeros(n);
        for k in 0..n {
            for c in 0..3 {
                diff.vals[k][c] = got.vals[k][c] - want[3 * k + c];
                wfield.vals[k][c] = want[3 * k + c];
            }
        }
        let rel = l2_norm_sym2(grid, g, &diff) / l2_norm_sym2(grid, g, &wfield).max(1e-14);
        assert!(rel < 1e-6, "{label}: relative L2 error {rel:.3e}");
        // interior sup (excluding two rows at each pole)
        let scale = wfield.max_abs().max(1e-14);
        let mut sup: f64 = 0.0;
        for i1 in 2..grid.n1 - 2 {
            for j in 0..grid.n2 {
                let k = i1 * grid.n2 + j;
                for c in 0..3 {
                    sup = sup.max(diff.vals[k][c].abs());
                }
            }
        }
        assert!(sup < 1e-6 * scale, "{label}: interior sup {sup:.3e} vs scale {scale:.3e}");
    }

    fn assert_close_scalar(
        grid: &Grid,
        g: &MetricField,
        got: &ScalarField,
        want: &[f64],
        label: &str,
    ) {
        let n = grid.n_nodes();
        let diff = ScalarField {
            vals: (0..n).map(|k| got.vals[k] - want[k]).collect(),
        };
        let wfield = ScalarField { vals: want.to_vec() };
        let rel = l2_norm_scalar(grid, g, &diff) / l2_norm_scalar(grid, g, &wfield).max(1e-14);
        assert!(rel < 1e-6, "{label}: relative L2 error {rel:.3e}");
        let scale = wfield.max_abs().max(1e-14);
        let mut sup: f64 = 0.0;
        for i1 in 2..grid.n1 - 2 {
            for j in 0..grid.n2 {
                sup = sup.max(diff.vals[i1 * grid.n2 + j].abs());
            }
        }
        assert!(sup < 1e-6 * scale, "{label}: interior sup {sup:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn inverse_variation_matrix_identity() {
        let (grid, g0) = setup();
        let mut rng = Rng::seeded(41);
        let base = metric_along(&grid, &g0, &random_band_sym2(&grid, &g0, 3, &mut rng, 0.05), 1.0);
        let h = random_band_sym2(&grid, &g0, 3, &mut rng, 0.05);
        let dinv = dmetric_inverse(&base, &h);
        // pointwise matrix identity d(g^-1) = -g^-1 h g^-1, checked by
        // multiplying back: g . dinv . g = -h
        for k in 0..grid.n_nodes() {
            let gm = base.comp.mat(k);
            let dm = dinv.mat(k);
            let hm = h.mat(k);
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            acc += gm[i][a] * dm[a][b] * gm[b][j];
                        }
                    }
                    assert!((acc + hm[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn scaling_examples() {
        let (grid, g0) = setup();
        // volume-form factor for h = 2 g: Tr(h)/2 = dim = 2
        let dv = dvolume_form(&g0, &g0.comp.scale(2.0));
        for v in &dv.vals {
            assert!((v - 2.0).abs() < 1e-12);
        }
        // scalar-curvature derivative along g_t = (1 + t) g0: R_t = 2/(1+t), R' = -2
        let dr = dscalar_curvature(&grid, &g0, &g0.comp);
        for v in &dr.vals {
            assert!((v + 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn all_formulas_match_finite_differences() {
        let (grid, g0) = setup();
        let mut rng = Rng::seeded(97);
        let n = grid.n_nodes();
        for trial in 0..10 {
            let gpert = random_band_sym2(&grid, &g0, 3, &mut rng, 0.05);
            let g = metric_along(&grid, &g0, &gpert, 1.0);
            let h = random_band_sym2(&grid, &g0, 3, &mut rng, 0.2);
            let u = random_band_scalar(&grid, 3, &mut rng, 0.5);
            let v = random_band_scalar(&grid, 3, &mut rng, 0.5);
            let label = format!("trial {trial}");

            let a = dscalar_curvature(&grid, &g, &h);
            let fd_a = fd::deriv1_vec(
                &mut |t| scalar_curvature(&grid, &metric_along(&grid, &g, &h, t)).vals,
                1e-3,
                1e-4,
            );
            assert_close_scalar(&grid, &g, &a, &fd_a, &format!("{label} dscalar"));

            let dric = dricci(&grid, &g, &h);
            let fd_ric = fd::deriv1_vec(
                &mut |t| {
                    let gt = metric_along(&grid, &g, &h, t);
                    ricci(&grid, &gt).vals.iter().flatten().copied().collect()
                },
                1e-3,
                1e-4,
            );
            assert_close_sym2(&grid, &g, &dric, &fd_ric, &format!("{label} dricci"));

            let dh = dhessian(&grid, &g, &h, &u, &v);
            let fd_h = fd::deriv1_vec(
                &mut |t| {
                    let gt = metric_along(&grid, &g, &h, t);
                    let ut = u.axpy_scalar(t, &v);
                    hessian(&grid, &gt, &ut).vals.iter().flatten().copied().collect()
                },
                1e-3,
                1e-4,
            );
            assert_close_sym2(&grid, &g, &dh, &fd_h, &format!("{label} dhessian"));

            let dn = dnorm_gradient(&grid, &g, &h, &u, &v);
            let fd_n = fd::deriv1_vec(
                &mut |t| {
                    let gt = metric_along(&grid, &g, &h, t);
                    let ut = u.axpy_scalar(t, &v);
                    let gu = gradient(&grid, &gt, &ut);
                    inner_vec(&gt, &gu, &gu).vals
                },
                1e-3,
                1e-4,
            );
            assert_close_scalar(&grid, &g, &dn, &fd_n, &format!("{label} dnorm"));

            let dvf = dvolume_form(&g, &h);
            let fd_v = fd::deriv1_vec(
                &mut |t| {
                    let gt = metric_along(&grid, &g, &h, t);
                    (0..n).map(|k| gt.sqrt_det(k) / g.sqrt_det(k)).collect()
                },
                1e-3,
                1e-4,
            );
            assert_close_scalar(&grid, &g, &dvf, &fd_v, &format!("{label} dvolume"));

            let dinv = dmetric_inverse(&g, &h);
            let fd_i = fd::deriv1_vec(
                &mut |t| {
                    let gt = metric_along(&grid, &g, &h, t);
                    (0..n).flat_map(|k| gt.inv(k)).collect()
                },
                1e-3,
                1e-4,
            );
            assert_close_sym2(&grid, &g, &dinv, &fd_i, &format!("{label} dinverse"));
        }
    }

    #[test]
    fn dricci_diffeomorphism_naturality() {
        let (grid, g0) = setup();
        let mut rng = Rng::seeded(53);
        // a curved non-round metric, so Ric is not proportional to g
        let g = metric_along(&grid, &g0, &random_band_sym2(&grid, &g0, 3, &mut rng, 0.06), 1.0);
        let psi = random_band_scalar(&grid, 3, &mut rng, 0.5);
        let v = gradient(&grid, &g, &psi);
        let h = lie_derivative_metric(&grid, &g, &v);
        let lhs = dricci(&grid, &g, &h);
        let rhs = lie_derivative_sym2(&grid, &g, &ricci(&grid, &g), &v);
        let flat: Vec<f64> = rhs.vals.iter().flatten().copied().collect();
        assert_close_sym2(&grid, &g, &lhs, &flat, "dricci naturality");
    }

    #[test]
    fn dscalar_diffeomorphism_naturality() {
        let (grid, g0) = setup();
        let mut rng = Rng::seeded(59);
        let g = metric_along(&grid, &g0, &random_band_sym2(&grid, &g0, 3, &mut rng, 0.06), 1.0);
        let psi = random_band_scalar(&grid, 3, &mut rng, 0.5);
        let v = gradient(&grid, &g, &psi);
        let h = lie_derivative_metric(&grid, &g, &v);
        let lhs = dscalar_curvature(&grid, &g, &h);
        // V(R) = <V, grad R>_g
        let r = scalar_curvature(&grid, &g);
        let rhs = inner_vec(&g, &v, &gradient(&grid, &g, &r));
        assert_close_scalar(&grid, &g, &lhs, &rhs.vals, "dscalar naturality");
    }

    #[test]
    fn constraint_path_residuals() {
        let grid = Grid::sphere(24, 48).unwrap();
        let bg = BackgroundData::new(grid, 3, 1.0).unwrap();
        let base = bg.base_pair();
        let mut rng = Rng::seeded(61);
        let n = bg.n_nodes();
        let mut x = TangentPair {
            h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
            v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
        };
        let resid = tangency_residual(&bg, &base, &x);
        let vol = crate::functionals::eval_a1(&bg, &base);
        for v in x.v.vals.iter_mut() {
            *v -= resid / (bg.b_inf * vol);
        }
        // Second-difference stencils amplify round-off like 1/eps^2; 1e-2
        // balances that against the O(eps^4) truncation of the 5-point rules.
        let eps = 1e-2;
        let sample = |t: f64| exp_chart(&bg, &x.scale(t)).unwrap();
        let path = PairPath {
            eps,
            pairs: [sample(-2.0 * eps), sample(-eps), sample(0.0), sample(eps), sample(2.0 * eps)],
        };
        let (r1, r2) = constraint_derivatives(&bg, &path).unwrap();
        assert!(r1.abs() < 1e-7, "first constraint {r1}");
        assert!(r2.abs() < 1e-7, "second constraint {r2}");

        // constant path: residuals vanish identically
        let cpath = PairPath {
            eps,
            pairs: [
                base.clone(),
                base.clone(),
                base.clone(),
                base.clone(),
                base.clone(),
            ],
        };
        let (c1, c2) = constraint_derivatives(&bg, &cpath).unwrap();
        assert!(c1.abs() < 1e-12 && c2.abs() < 1e-12);

        // direct first-constraint integrand for (h, v) = (g0, -1): exactly 0
        let special = TangentPair {
            h: bg.g0.comp.clone(),
            v: ScalarField::constant(n, -1.0),
        };
        assert!(tangency_residual(&bg, &base, &special).abs() < 1e-12);

        // a path that leaves the constraint set is rejected
        let mut bad = base.clone();
        bad.w = WeightField::new(bad.w.vals.iter().map(|w| w * 1.01).collect()).unwrap();
        let bpath = PairPath {
            eps,
            pairs: [base.clone(), base.clone(), base.clone(), base.clone(), bad],
        };
        assert!(matches!(
            constraint_derivatives(&bg, &bpath),
            Err(VariationError::PathLeavesConstraint { .. })
        ));
        let _ = VectorField::zeros(0);
    }
}
