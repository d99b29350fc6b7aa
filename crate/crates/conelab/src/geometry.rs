//! Chart-based discrete Riemannian calculus on the 2-d cross-section:
//! curvature tensors, Hessians, divergences, the Lichnerowicz operator, and
//! metric-weighted integration.
//!
//! All spectral differentiation acts on smooth tensor components only; the
//! Christoffel symbols and their chart derivatives (whose components are
//! singular at the poles of the sphere chart) are assembled algebraically
//! from derivatives of the metric, so no singular field is ever
//! differentiated numerically.
//!
//! Curvature conventions, pinned by the round-sphere tests below:
//! `R(X,Y)Z = \nabla_X \nabla_Y Z - \nabla_Y \nabla_X Z - \nabla_{[X,Y]} Z`,
//! `riem4(i,k,j,l) = <R(e_k, e_i) e_j, e_l>`, so `g^{kl} riem4(i,k,j,l) =
//! Ric_{ij}` and `riem4(i,k,j,l) h^{kl}` is the curvature term of the
//! Lichnerowicz operator.

use crate::fields::{
    sym_idx, Christoffel, CurvatureField, FieldError, MetricField, Rank3Field, ScalarField,
    SymTensorField, VectorField,
};
use crate::grid::{Grid, Parity};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("operation requires a sphere grid")]
    NotSphere,
    #[error("operation requires a torus grid")]
    NotTorus,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Round metric of the given radius in colatitude/longitude components.
pub fn round_sphere_metric(grid: &Grid, radius: f64) -> Result<MetricField, GeometryError> {
    if radius <= 0.0 {
        return Err(GeometryError::NonPositiveRadius(radius));
    }
    if !grid.is_sphere() {
        return Err(GeometryError::NotSphere);
    }
    let r2 = radius * radius;
    let comp = SymTensorField::from_fn(grid, |t, _| [r2, 0.0, r2 * t.sin() * t.sin()]);
    Ok(MetricField::new(grid, comp)?)
}

/// Constant-coefficient metric on the flat periodic chart.
pub fn flat_torus_metric(grid: &Grid, comp: [f64; 3]) -> Result<MetricField, GeometryError> {
    if grid.is_sphere() {
        return Err(GeometryError::NotTorus);
    }
    let field = SymTensorField {
        vals: vec![comp; grid.n_nodes()],
    };
    Ok(MetricField::new(grid, field)?)
}

/// Chart partials of a scalar: out[a] = d_a u.
pub fn d_scalar(grid: &Grid, u: &[f64]) -> [Vec<f64>; 2] {
    let d0 = grid.d1(u, Parity::Even);
    let d1 = grid.d2(u);
    [d0, d1]
}

/// Second chart partials of a scalar: out[a][b] = d_a d_b u (a <= b used).
pub fn dd_scalar(grid: &Grid, u: &[f64]) -> [[Vec<f64>; 2]; 2] {
    let d0 = grid.d1(u, Parity::Even);
    let d1 = grid.d2(u);
    let d00 = grid.d1_comp(&d0, 1, 0);
    let d01 = grid.d2(&d0);
    let d10 = grid.d1_comp(&d1, 0, 1);
    let d11 = grid.d2(&d1);
    [[d00, d01], [d10, d11]]
}

/// Chart partials of a packed symmetric tensor: get(k, a, i, j) = d_a h_{ij}.
pub fn d_sym2(grid: &Grid, h: &SymTensorField) -> Rank3Field {
    let n = h.len();
    let mut comp_cols: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for k in 0..n {
        for c in 0..3 {
            comp_cols[c][k] = h.vals[k][c];
        }
    }
    // Packed component c = (i,j) has theta-index counts 2, 1, 0 and
    // phi-index counts 0, 1, 2.
    let theta_counts = [2usize, 1, 0];
    let phi_counts = [0usize, 1, 2];
    let mut out = Rank3Field::zeros(n);
    for c in 0..3 {
        let da = grid.d1_comp(&comp_cols[c], theta_counts[c], phi_counts[c]);
        let db = grid.d2(&comp_cols[c]);
        for k in 0..n {
            out.vals[k][c] = da[k];
            out.vals[k][3 + c] = db[k];
        }
    }
    out
}

/// Christoffel symbols of g, assembled pointwise from d g and the inverse.
pub fn christoffel(grid: &Grid, g: &MetricField) -> Christoffel {
    let n = g.len();
    let dg = d_sym2(grid, &g.comp);
    let mut out = Christoffel::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for k in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut acc = 0.0;
                    for l in 0..2 {
                        let term = dg.get(node, i, l, j) + dg.get(node, j, l, i)
                            - dg.get(node, l, i, j);
                        acc += 0.5 * ginv[k][l] * term;
                    }
                    out.set(node, k, i, j, acc);
                }
            }
        }
    }
    out
}

/// Chart derivatives of the Christoffel symbols, assembled algebraically from
/// first and second derivatives of the metric (never by differentiating the
/// Christoffel components themselves, which are pole-singular on the sphere).
/// Layout: vals[node][(a * 2 + k) * 3 + sym(i,j)] = d_a Gamma^k_{ij}.
pub struct DChristoffel {
    pub vals: Vec<[f64; 12]>,
}

impl DChristoffel {
    #[inline]
    pub fn get(&self, node: usize, a: usize, k: usize, i: usize, j: usize) -> f64 {
        self.vals[node][(a * 2 + k) * 3 + sym_idx(i, j)]
    }
}

pub fn dchristoffel(grid: &Grid, g: &MetricField) -> DChristoffel {
    let n = g.len();
    let dg = d_sym2(grid, &g.comp);
    // Second partials d_a d_b g_{ij}: differentiate the rank-3 field d_b g_{ij}.
    // Components of dg have theta-count = (b == 0) + count(i,j).
    let mut ddg = vec![[0.0; 12]; n]; // [(a*2+b)*3 + sym]
    for b in 0..2 {
        for c in 0..3 {
            let theta_count = if b == 0 { 1 } else { 0 } + [2usize, 1, 0][c];
            // Structural sin(theta) power of d_b g_{ij}: a theta derivative
            // strips one factor from the component's phi-index count, a phi
            // derivative keeps it (the scaled cofactor is smooth on the
            // extended torus but need not vanish along the pole lines).
            let phi_count = if b == 0 { [0usize, 0, 1][c] } else { [0usize, 1, 2][c] };
            let col: Vec<f64> = (0..n).map(|k| dg.vals[k][b * 3 + c]).collect();
            let da0 = grid.d1_comp(&col, theta_count, phi_count);
            let da1 = grid.d2(&col);
            for k in 0..n {
                ddg[k][(0 * 2 + b) * 3 + c] = da0[k];
                ddg[k][(1 * 2 + b) * 3 + c] = da1[k];
            }
        }
    }
    let mut out = vec![[0.0; 12]; n];
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        // d_a g^{kl} = -g^{kp} (d_a g_{pq}) g^{ql}
        let mut dginv = [[[0.0; 2]; 2]; 2];
        for a in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut acc = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            acc -= ginv[k][p] * dg.get(node, a, p, q) * ginv[q][l];
                        }
                    }
                    dginv[a][k][l] = acc;
                }
            }
        }
        for a in 0..2 {
            for k in 0..2 {
                for i in 0..2 {
                    for j in i..2 {
                        let mut acc = 0.0;
                        for l in 0..2 {
                            let sym1 = dg.get(node, i, l, j) + dg.get(node, j, l, i)
                                - dg.get(node, l, i, j);
                            let sym2 = ddg[node][(a * 2 + i) * 3 + sym_idx(l, j)]
                                + ddg[node][(a * 2 + j) * 3 + sym_idx(l, i)]
                                - ddg[node][(a * 2 + l) * 3 + sym_idx(i, j)];
                            acc += 0.5 * (dginv[a][k][l] * sym1 + ginv[k][l] * sym2);
                        }
                        out[node][(a * 2 + k) * 3 + sym_idx(i, j)] = acc;
                    }
                }
            }
        }
    }
    DChristoffel { vals: out }
}

/// Full curvature tensor in the layout riem4(i,k,j,l) = <R(e_k,e_i)e_j, e_l>.
pub fn riemann(grid: &Grid, g: &MetricField) -> CurvatureField {
    let n = g.len();
    let gam = christoffel(grid, g);
    let dgam = dchristoffel(grid, g);
    let mut out = CurvatureField::zeros(n);
    for node in 0..n {
        let gm = g.comp.mat(node);
        // R^m_{pij}: R(e_p, e_i) e_j = R^m_{pij} e_m
        let mut rup = [[[[0.0; 2]; 2]; 2]; 2]; // [m][p][i][j]
        for m in 0..2 {
            for p in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut acc = dgam.get(node, p, m, i, j) - dgam.get(node, i, m, p, j);
                        for l in 0..2 {
                            acc += gam.get(node, l, i, j) * gam.get(node, m, p, l)
                                - gam.get(node, l, p, j) * gam.get(node, m, i, l);
                        }
                        rup[m][p][i][j] = acc;
                    }
                }
            }
        }
        for i in 0..2 {
            for k in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        // <R(e_k, e_i) e_j, e_l> = g_{lm} R^m_{kij}
                        let mut acc = 0.0;
                        for m in 0..2 {
                            acc += gm[l][m] * rup[m][k][i][j];
                        }
                        out.set(node, i, k, j, l, acc);
                    }
                }
            }
        }
    }
    out
}

/// Ricci tensor by contraction of the curvature tensor.
pub fn ricci(grid: &Grid, g: &MetricField) -> SymTensorField {
    let riem = riemann(grid, g);
    ricci_from_riemann(g, &riem)
}

pub fn ricci_from_riemann(g: &MetricField, riem: &CurvatureField) -> SymTensorField {
    let n = g.len();
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += ginv[k][l] * riem.get(node, i, k, j, l);
                    }
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Scalar curvature (trace of Ricci).
pub fn scalar_curvature(grid: &Grid, g: &MetricField) -> ScalarField {
    let ric = ricci(grid, g);
    trace(g, &ric)
}

/// g-trace of a symmetric 2-tensor.
pub fn trace(g: &MetricField, h: &SymTensorField) -> ScalarField {
    let n = g.len();
    let mut out = vec![0.0; n];
    for node in 0..n {
        let gi = g.inv(node);
        let c = h.vals[node];
        out[node] = gi[0] * c[0] + 2.0 * gi[1] * c[1] + gi[2] * c[2];
    }
    ScalarField { vals: out }
}

/// Pointwise inner product of symmetric 2-tensors: g^{ik} g^{jl} a_{ij} b_{kl}.
pub fn inner_sym2(g: &MetricField, a: &SymTensorField, b: &SymTensorField) -> ScalarField {
    let n = g.len();
    let mut out = vec![0.0; n];
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let am = a.mat(node);
        let bm = b.mat(node);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        acc += ginv[i][k] * ginv[j][l] * am[i][j] * bm[k][l];
                    }
                }
            }
        }
        out[node] = acc;
    }
    ScalarField { vals: out }
}

/// Pointwise inner product of contravariant vectors: g_{ij} v^i w^j.
pub fn inner_vec(g: &MetricField, v: &VectorField, w: &VectorField) -> ScalarField {
    let n = g.len();
    let mut out = vec![0.0; n];
    for node in 0..n {
        let gm = g.comp.mat(node);
        let a = v.vals[node];
        let b = w.vals[node];
        out[node] =
            gm[0][0] * a[0] * b[0] + gm[0][1] * (a[0] * b[1] + a[1] * b[0]) + gm[1][1] * a[1] * b[1];
    }
    ScalarField { vals: out }
}

/// Gradient of a scalar, contravariant components.
pub fn gradient(grid: &Grid, g: &MetricField, u: &ScalarField) -> VectorField {
    let du = d_scalar(grid, &u.vals);
    let n = g.len();
    let mut out = VectorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for i in 0..2 {
            out.vals[node][i] = ginv[i][0] * du[0][node] + ginv[i][1] * du[1][node];
        }
    }
    out
}

/// Covariant Hessian of a scalar.
pub fn hessian(grid: &Grid, g: &MetricField, u: &ScalarField) -> SymTensorField {
    let ddu = dd_scalar(grid, &u.vals);
    let du = d_scalar(grid, &u.vals);
    let gam = christoffel(grid, g);
    let n = g.len();
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.5 * (ddu[i][j][node] + ddu[j][i][node]);
                for k in 0..2 {
                    acc -= gam.get(node, k, i, j) * du[k][node];
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Laplace-Beltrami operator on scalars (trace of the Hessian).
pub fn laplacian(grid: &Grid, g: &MetricField, u: &ScalarField) -> ScalarField {
    let h = hessian(grid, g, u);
    trace(g, &h)
}

/// Covariant derivative of a symmetric 2-tensor: get(k, a, i, j) = nabla_a h_{ij}.
pub fn cov_deriv_sym2(grid: &Grid, g: &MetricField, h: &SymTensorField) -> Rank3Field {
    let dh = d_sym2(grid, h);
    let gam = christoffel(grid, g);
    let n = g.len();
    let mut out = Rank3Field::zeros(n);
    for node in 0..n {
        let hm = h.mat(node);
        for a in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let mut acc = dh.get(node, a, i, j);
                    for k in 0..2 {
                        acc -= gam.get(node, k, a, i) * hm[k][j];
                        acc -= gam.get(node, k, a, j) * hm[i][k];
                    }
                    out.set(node, a, i, j, acc);
                }
            }
        }
    }
    out
}

/// Divergence of a symmetric 2-tensor, returned with the free index raised:
/// (div h)^j = g^{ab} g^{jc} nabla_a h_{bc}.
pub fn divergence_sym2(grid: &Grid, g: &MetricField, h: &SymTensorField) -> VectorField {
    let nh = cov_deriv_sym2(grid, g, h);
    let n = g.len();
    let mut out = VectorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for j in 0..2 {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        acc += ginv[a][b] * ginv[j][c] * nh.get(node, a, b, c);
                    }
                }
            }
            out.vals[node][j] = acc;
        }
    }
    out
}

/// Covariant divergence with the free index down: (div h)_j = g^{ab} nabla_a h_{bj}.
pub fn divergence_sym2_oneform(grid: &Grid, g: &MetricField, h: &SymTensorField) -> Vec<[f64; 2]> {
    let nh = cov_deriv_sym2(grid, g, h);
    let n = g.len();
    let mut out = vec![[0.0; 2]; n];
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for j in 0..2 {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    acc += ginv[a][b] * nh.get(node, a, b, j);
                }
            }
            out[node][j] = acc;
        }
    }
    out
}

/// Double divergence of a symmetric 2-tensor: nabla^i nabla^j h_{ij}.
/// Assembled from covariant components throughout: contravariant components
/// are pole-singular on the sphere chart and must never be differentiated.
pub fn double_divergence(grid: &Grid, g: &MetricField, h: &SymTensorField) -> ScalarField {
    let dh = divergence_sym2_oneform(grid, g, h);
    trace_cov_deriv_oneform(grid, g, &dh)
}

/// Divergence of a contravariant vector field, via its lowered one-form.
pub fn divergence_vec(grid: &Grid, g: &MetricField, v: &VectorField) -> ScalarField {
    let n = g.len();
    let mut omega = vec![[0.0; 2]; n];
    for node in 0..n {
        let gm = g.comp.mat(node);
        for j in 0..2 {
            omega[node][j] = gm[j][0] * v.vals[node][0] + gm[j][1] * v.vals[node][1];
        }
    }
    trace_cov_deriv_oneform(grid, g, &omega)
}

/// g^{ab} nabla_a omega_b for a covariant one-form.
fn trace_cov_deriv_oneform(grid: &Grid, g: &MetricField, omega: &[[f64; 2]]) -> ScalarField {
    let nw = cov_deriv_oneform(grid, g, omega);
    let n = g.len();
    let mut out = vec![0.0; n];
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                acc += ginv[a][b] * nw[node][a][b];
            }
        }
        out[node] = acc;
    }
    ScalarField { vals: out }
}

/// Lie derivative of the metric along a contravariant vector field:
/// (L_V g)_{ij} = nabla_i V_j + nabla_j V_i.
pub fn lie_derivative_metric(grid: &Grid, g: &MetricField, v: &VectorField) -> SymTensorField {
    let n = g.len();
    // Lower the index: V_i = g_{ik} V^k; components keep tensor parity.
    let mut v0 = vec![0.0; n];
    let mut v1 = vec![0.0; n];
    for node in 0..n {
        let gm = g.comp.mat(node);
        v0[node] = gm[0][0] * v.vals[node][0] + gm[0][1] * v.vals[node][1];
        v1[node] = gm[1][0] * v.vals[node][0] + gm[1][1] * v.vals[node][1];
    }
    let d00 = grid.d1_comp(&v0, 1, 0);
    let d01 = grid.d2(&v0);
    let d10 = grid.d1_comp(&v1, 0, 1);
    let d11 = grid.d2(&v1);
    let gam = christoffel(grid, g);
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let vlow = [v0[node], v1[node]];
        let dv = [[d00[node], d01[node]], [d10[node], d11[node]]];
        for i in 0..2 {
            for j in i..2 {
                // nabla_i V_j = d_i V_j - Gamma^k_{ij} V_k
                let mut acc = dv[j][i] + dv[i][j];
                for k in 0..2 {
                    acc -= 2.0 * gam.get(node, k, i, j) * vlow[k];
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Covariant derivative of a 1-form given by its covariant components:
/// out[node][i][j] = nabla_i omega_j.
pub fn cov_deriv_oneform(grid: &Grid, g: &MetricField, omega: &[[f64; 2]]) -> Vec<[[f64; 2]; 2]> {
    let n = g.len();
    let w0: Vec<f64> = (0..n).map(|k| omega[k][0]).collect();
    let w1: Vec<f64> = (0..n).map(|k| omega[k][1]).collect();
    let d00 = grid.d1_comp(&w0, 1, 0);
    let d01 = grid.d2(&w0);
    let d10 = grid.d1_comp(&w1, 0, 1);
    let d11 = grid.d2(&w1);
    let gam = christoffel(grid, g);
    let mut out = vec![[[0.0; 2]; 2]; n];
    for node in 0..n {
        let dw = [[d00[node], d10[node]], [d01[node], d11[node]]]; // dw[i][j] = d_i w_j
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = dw[i][j];
                for k in 0..2 {
                    acc -= gam.get(node, k, i, j) * omega[node][k];
                }
                out[node][i][j] = acc;
            }
        }
    }
    out
}

/// Lie derivative of a symmetric 2-tensor along a contravariant field:
/// (L_V T)_{ij} = V^k nabla_k T_{ij} + T_{kj} nabla_i V^k + T_{ik} nabla_j V^k.
pub fn lie_derivative_sym2(
    grid: &Grid,
    g: &MetricField,
    t: &SymTensorField,
    v: &VectorField,
) -> SymTensorField {
    let n = g.len();
    let nt = cov_deriv_sym2(grid, g, t);
    // nabla_i V^k = g^{kj} nabla_i V_j, from the lowered one-form whose
    // components are smooth on the chart.
    let mut omega = vec![[0.0; 2]; n];
    for node in 0..n {
        let gm = g.comp.mat(node);
        for j in 0..2 {
            omega[node][j] = gm[j][0] * v.vals[node][0] + gm[j][1] * v.vals[node][1];
        }
    }
    let nw = cov_deriv_oneform(grid, g, &omega);
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let tm = t.mat(node);
        let vv = v.vals[node];
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let mut nv = [[0.0; 2]; 2]; // nv[i][k] = nabla_i V^k
        for i in 0..2 {
            for k in 0..2 {
                let mut acc = 0.0;
                for j in 0..2 {
                    acc += ginv[k][j] * nw[node][i][j];
                }
                nv[i][k] = acc;
            }
        }
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += vv[k] * nt.get(node, k, i, j);
                    acc += tm[k][j] * nv[i][k];
                    acc += tm[i][k] * nv[j][k];
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Rough Laplacian on symmetric 2-tensors: (Delta h)_{ij} = g^{ab} (nabla^2 h)_{ab ij}.
pub fn rough_laplacian_sym2(grid: &Grid, g: &MetricField, h: &SymTensorField) -> SymTensorField {
    let nh = cov_deriv_sym2(grid, g, h); // T_{a(ij)}
    let gam = christoffel(grid, g);
    let n = g.len();
    // Chart partials of T: d_b T_{a(ij)}. Theta count of component = (a==0) + count(i,j).
    let mut dt = vec![[0.0; 12]; n]; // [(b*2 + a)*3 + sym]
    for a in 0..2 {
        for c in 0..3 {
            let theta_count = if a == 0 { 1 } else { 0 } + [2usize, 1, 0][c];
            let phi_count = if a == 1 { 1 } else { 0 } + [0usize, 1, 2][c];
            let col: Vec<f64> = (0..n).map(|k| nh.vals[k][a * 3 + c]).collect();
            let db0 = grid.d1_comp(&col, theta_count, phi_count);
            let db1 = grid.d2(&col);
            for k in 0..n {
                dt[k][(0 * 2 + a) * 3 + c] = db0[k];
                dt[k][(1 * 2 + a) * 3 + c] = db1[k];
            }
        }
    }
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        // (nabla_b nabla h)_{a i j} = d_b T_{aij}
                        //   - Gamma^c_{ba} T_{cij} - Gamma^c_{bi} T_{acj} - Gamma^c_{bj} T_{aic}
                        let mut v = dt[node][(b * 2 + a) * 3 + sym_idx(i, j)];
                        for c in 0..2 {
                            v -= gam.get(node, c, b, a) * nh.get(node, c, i, j);
                            v -= gam.get(node, c, b, i) * nh.get(node, a, c, j);
                            v -= gam.get(node, c, b, j) * nh.get(node, a, i, c);
                        }
                        acc += ginv[a][b] * v;
                    }
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Lichnerowicz operator on symmetric 2-tensors:
/// (L h)_{ij} = (Delta h)_{ij} + 2 riem4(i,k,j,l) h^{kl}.
pub fn lichnerowicz(grid: &Grid, g: &MetricField, h: &SymTensorField) -> SymTensorField {
    let lap = rough_laplacian_sym2(grid, g, h);
    let curv = lichnerowicz_curvature_term(grid, g, h);
    lap.axpy(2.0, &curv)
}

/// The curvature contraction riem4(i,k,j,l) h^{kl} appearing in the
/// Lichnerowicz operator; equals Ric when h = g.
pub fn lichnerowicz_curvature_term(
    grid: &Grid,
    g: &MetricField,
    h: &SymTensorField,
) -> SymTensorField {
    let riem = riemann(grid, g);
    let n = g.len();
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let hm = h.mat(node);
        // h^{kl}
        let mut hup = [[0.0; 2]; 2];
        for k in 0..2 {
            for l in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += ginv[k][a] * ginv[l][b] * hm[a][b];
                    }
                }
                hup[k][l] = acc;
            }
        }
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += riem.get(node, i, k, j, l) * hup[k][l];
                    }
                }
                out.vals[node][sym_idx(i, j)] = acc;
            }
        }
    }
    out
}

/// Pointwise inner product of rank-3 tensors T_{a(ij)} (covariant).
pub fn inner_rank3(g: &MetricField, s: &Rank3Field, t: &Rank3Field) -> ScalarField {
    let n = g.len();
    let mut out = vec![0.0; n];
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let mut acc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for k in 0..2 {
                        for j in 0..2 {
                            for l in 0..2 {
                                acc += ginv[a][b]
                                    * ginv[i][k]
                                    * ginv[j][l]
                                    * s.get(node, a, i, j)
                                    * t.get(node, b, k, l);
                            }
                        }
                    }
                }
            }
        }
        out[node] = acc;
    }
    ScalarField { vals: out }
}

/// Integral of a scalar against the volume form of g.
pub fn integrate(grid: &Grid, f: &ScalarField, g: &MetricField) -> f64 {
    let w = grid.quad_weights();
    let rho = grid.ref_density();
    let mut acc = 0.0;
    for k in 0..f.len() {
        acc += w[k] * f.vals[k] * g.sqrt_det(k) / rho[k];
    }
    acc
}

/// Volume (area) of the cross-section under g.
pub fn volume(grid: &Grid, g: &MetricField) -> f64 {
    integrate(grid, &ScalarField::constant(g.len(), 1.0), g)
}

/// Commutator correction C with Delta(Hess u) - Hess(Delta u) = C on a 2-d
/// chart, with the curvature terms explicit:
/// C_{jk} = 4 K Hess_{jk} - 2 K (Delta u) g_{jk}
///          - <grad K, grad u> g_{jk} + (d_j K)(d_k u) + (d_k K)(d_j u),
/// where K is the Gauss curvature (half the scalar curvature). On a flat
/// chart it vanishes and the operators commute exactly.
pub fn hess_commutator_correction(grid: &Grid, g: &MetricField, u: &ScalarField) -> SymTensorField {
    let n = g.len();
    let kfield = scalar_curvature(grid, g).scale(0.5);
    let hess = hessian(grid, g, u);
    let lap = trace(g, &hess);
    let du = d_scalar(grid, &u.vals);
    let dk = d_scalar(grid, &kfield.vals);
    let mut out = SymTensorField::zeros(n);
    for node in 0..n {
        let gi = g.inv(node);
        let ginv = [[gi[0], gi[1]], [gi[1], gi[2]]];
        let gm = g.comp.mat(node);
        let kv = kfield.vals[node];
        let gradk_dot_gradu = {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    acc += ginv[a][b] * dk[a][node] * du[b][node];
                }
            }
            acc
        };
        for j in 0..2 {
            for k2 in j..2 {
                let v = 4.0 * kv * hess.vals[node][sym_idx(j, k2)]
                    - 2.0 * kv * lap.vals[node] * gm[j][k2]
                    - gradk_dot_gradu * gm[j][k2]
                    + dk[j][node] * du[k2][node]
                    + dk[k2][node] * du[j][node];
                out.vals[node][sym_idx(j, k2)] = v;
            }
        }
    }
    out
}

/// Hessian of the Laplacian followed by the rough Laplacian of the Hessian,
/// for commutation tests.
pub fn laplace_of_hessian(grid: &Grid, g: &MetricField, u: &ScalarField) -> SymTensorField {
    let h = hessian(grid, g, u);
    rough_laplacian_sym2(grid, g, &h)
}

pub fn hessian_of_laplacian(grid: &Grid, g: &MetricField, u: &ScalarField) -> SymTensorField {
    let lap = laplacian(grid, g, u);
    hessian(grid, g, &lap)
}

/// L2 norm of a symmetric tensor field against g.
pub fn l2_norm_sym2(grid: &Grid, g: &MetricField, h: &SymTensorField) -> f64 {
    integrate(grid, &inner_sym2(g, h, h), g).sqrt()
}

pub fn l2_norm_scalar(grid: &Grid, g: &MetricField, u: &ScalarField) -> f64 {
    integrate(grid, &u.mul(u), g).sqrt()
}
