//! Nodal field containers: scalars, chart-frame vectors, and symmetric
//! 2-tensors on a 2-d cross-section chart, plus the positive-definite metric
//! and positive weight wrappers.
//!
//! Symmetric tensors are stored packed as `[c11, c12, c22]` in the coordinate
//! frame. Rank-3 and rank-4 scratch containers hold covariant derivatives.

use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("metric not positive definite at node {node} (theta/x = {c1:.6}, phi/y = {c2:.6})")]
    SingularMetric { node: usize, c1: f64, c2: f64 },
    #[error("weight not positive at node {node} (value {value:.6e})")]
    NonPositiveWeight { node: usize, value: f64 },
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("field defined on {got} nodes, grid has {want}")]
    GridMismatch { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub vals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    /// Contravariant chart components [v^1, v^2] per node.
    pub vals: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    /// Packed covariant components [c11, c12, c22] per node.
    pub vals: Vec<[f64; 3]>,
}

/// Positive-definite symmetric 2-tensor field: the metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub comp: SymTensorField,
}

/// Strictly positive scalar field: the weight w of a pair (g, w).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub vals: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField { vals: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField { vals: vec![c; n] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            vals: grid.nodes().iter().map(|&(a, b)| f(a, b)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        for (k, v) in self.vals.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFinite { node: k });
            }
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Self {
        ScalarField {
            vals: self.vals.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, o: &ScalarField) -> Self {
        ScalarField {
            vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &ScalarField) -> Self {
        ScalarField {
            vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, o: &ScalarField) -> Self {
        ScalarField {
            vals: self.vals.iter().zip(&o.vals).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn axpy_scalar(&self, c: f64, o: &ScalarField) -> Self {
        ScalarField {
            vals: self
                .vals
                .iter()
                .zip(&o.vals)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        VectorField { vals: vec![[0.0; 2]; n] }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn scale(&self, c: f64) -> Self {
        VectorField {
            vals: self.vals.iter().map(|v| [c * v[0], c * v[1]]).collect(),
        }
    }

    pub fn add(&self, o: &VectorField) -> Self {
        VectorField {
            vals: self
                .vals
                .iter()
                .zip(&o.vals)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals
            .iter()
            .fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

impl SymTensorField {
    pub fn zeros(n: usize) -> Self {
        SymTensorField { vals: vec![[0.0; 3]; n] }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        SymTensorField {
            vals: grid.nodes().iter().map(|&(a, b)| f(a, b)).collect(),
        }
    }

    /// Full 2x2 matrix at a node.
    pub fn mat(&self, k: usize) -> [[f64; 2]; 2] {
        let c = self.vals[k];
        [[c[0], c[1]], [c[1], c[2]]]
    }

    pub fn scale(&self, c: f64) -> Self {
        SymTensorField {
            vals: self
                .vals
                .iter()
                .map(|v| [c * v[0], c * v[1], c * v[2]])
                .collect(),
        }
    }

    pub fn add(&self, o: &SymTensorField) -> Self {
        SymTensorField {
            vals: self
                .vals
                .iter()
                .zip(&o.vals)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
        }
    }

    pub fn sub(&self, o: &SymTensorField) -> Self {
        SymTensorField {
            vals: self
                .vals
                .iter()
                .zip(&o.vals)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        }
    }

    pub fn axpy(&self, c: f64, o: &SymTensorField) -> Self {
        SymTensorField {
            vals: self
                .vals
                .iter()
                .zip(&o.vals)
                .map(|(a, b)| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]])
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals
            .iter()
            .fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()).max(v[2].abs()))
    }

    /// Pointwise multiply by a scalar field.
    pub fn mul_scalar_field(&self, s: &ScalarField) -> Self {
        SymTensorField {
            vals: self
                .vals
                .iter()
                .zip(&s.vals)
                .map(|(a, c)| [c * a[0], c * a[1], c * a[2]])
                .collect(),
        }
    }
}

impl MetricField {
    /// Validates symmetry (structural), positive definiteness, finiteness.
    pub fn new(grid: &Grid, comp: SymTensorField) -> Result<MetricField, FieldError> {
        if comp.len() != grid.n_nodes() {
            return Err(FieldError::GridMismatch {
                got: comp.len(),
                want: grid.n_nodes(),
            });
        }
        let nodes = grid.nodes();
        for (k, c) in comp.vals.iter().enumerate() {
            if !(c[0].is_finite() && c[1].is_finite() && c[2].is_finite()) {
                return Err(FieldError::NonFinite { node: k });
            }
            let det = c[0] * c[2] - c[1] * c[1];
            if !(c[0] > 0.0 && det > 0.0) {
                let (c1, c2) = nodes[k];
                return Err(FieldError::SingularMetric { node: k, c1, c2 });
            }
        }
        Ok(MetricField { comp })
    }

    pub fn len(&self) -> usize {
        self.comp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comp.is_empty()
    }

    pub fn det(&self, k: usize) -> f64 {
        let c = self.comp.vals[k];
        c[0] * c[2] - c[1] * c[1]
    }

    pub fn sqrt_det(&self, k: usize) -> f64 {
        self.det(k).sqrt()
    }

    /// Inverse metric components [g^11, g^12, g^22] at a node.
    pub fn inv(&self, k: usize) -> [f64; 3] {
        let c = self.comp.vals[k];
        let det = c[0] * c[2] - c[1] * c[1];
        [c[2] / det, -c[1] / det, c[0] / det]
    }

    /// Smallest eigenvalue of the component matrix at a node.
    pub fn min_eig(&self, k: usize) -> f64 {
        let c = self.comp.vals[k];
        let tr = c[0] + c[2];
        let det = c[0] * c[2] - c[1] * c[1];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        tr / 2.0 - disc
    }

    /// Global minimum eigenvalue over all nodes.
    pub fn min_eig_global(&self) -> f64 {
        (0..self.len()).fold(f64::INFINITY, |m, k| m.min(self.min_eig(k)))
    }
}

impl WeightField {
    pub fn new(vals: Vec<f64>) -> Result<WeightField, FieldError> {
        for (k, v) in vals.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFinite { node: k });
            }
            if *v <= 0.0 {
                return Err(FieldError::NonPositiveWeight { node: k, value: *v });
            }
        }
        Ok(WeightField { vals })
    }

    pub fn constant(n: usize, c: f64) -> Result<WeightField, FieldError> {
        WeightField::new(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn as_scalar(&self) -> ScalarField {
        ScalarField {
            vals: self.vals.clone(),
        }
    }
}

/// Rank-3 container T_{a(ij)}: chart index a times packed symmetric (ij).
#[derive(Debug, Clone)]
pub struct Rank3Field {
    /// Per node: [a=0: c11 c12 c22, a=1: c11 c12 c22].
    pub vals: Vec<[f64; 6]>,
}

impl Rank3Field {
    pub fn zeros(n: usize) -> Self {
        Rank3Field { vals: vec![[0.0; 6]; n] }
    }

    pub fn get(&self, k: usize, a: usize, i: usize, j: usize) -> f64 {
        self.vals[k][a * 3 + sym_idx(i, j)]
    }

    pub fn set(&mut self, k: usize, a: usize, i: usize, j: usize, v: f64) {
        self.vals[k][a * 3 + sym_idx(i, j)] = v;
    }
}

/// Rank-4 container T_{ab(ij)}: two chart indices times packed symmetric pair.
#[derive(Debug, Clone)]
pub struct Rank4Field {
    pub vals: Vec<[f64; 12]>,
}

impl Rank4Field {
    pub fn zeros(n: usize) -> Self {
        Rank4Field { vals: vec![[0.0; 12]; n] }
    }

    pub fn get(&self, k: usize, a: usize, b: usize, i: usize, j: usize) -> f64 {
        self.vals[k][(a * 2 + b) * 3 + sym_idx(i, j)]
    }

    pub fn set(&mut self, k: usize, a: usize, b: usize, i: usize, j: usize, v: f64) {
        self.vals[k][(a * 2 + b) * 3 + sym_idx(i, j)] = v;
    }
}

/// Full 4-index curvature container R(i,k,j,l) per node (2^4 entries).
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub vals: Vec<[f64; 16]>,
}

impl CurvatureField {
    pub fn zeros(n: usize) -> Self {
        CurvatureField { vals: vec![[0.0; 16]; n] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, p: usize, j: usize, q: usize) -> f64 {
        self.vals[k][((i * 2 + p) * 2 + j) * 2 + q]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, p: usize, j: usize, q: usize, v: f64) {
        self.vals[k][((i * 2 + p) * 2 + j) * 2 + q] = v;
    }
}

#[inline]
pub fn sym_idx(i: usize, j: usize) -> usize {
    // (0,0) -> 0, (0,1)/(1,0) -> 1, (1,1) -> 2
    i + j
}

/// Christoffel symbols Gamma^k_{(ij)} packed like Rank3 with the upper index first.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub vals: Vec<[f64; 6]>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel { vals: vec![[0.0; 6]; n] }
    }

    #[inline]
    pub fn get(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        self.vals[node][k * 3 + sym_idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, node: usize, k: usize, i: usize, j: usize, v: f64) {
        self.vals[node][k * 3 + sym_idx(i, j)] = v;
    }
}
