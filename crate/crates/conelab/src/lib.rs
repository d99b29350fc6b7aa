//! Desk-scale numerical laboratory for the machinery behind uniqueness of
//! tangent cones: weighted Einstein-Hilbert-type functionals on a discretized
//! sphere cross-section, their first and second variations, a finite-dimensional
//! Lyapunov-Schmidt reduction with empirical Lojasiewicz exponents, radial
//! Green's-function cone models with monotone level-set energies, and the
//! dyadic sequence engine that converts decay inequalities into uniqueness
//! certificates.
//!
//! The crate is organized as a library plus one thin CLI (`conelab`). Each
//! major capability has a runnable example under `examples/`.

pub mod decay;
pub mod fd;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod harmonics;
pub mod rng;

pub mod cone;
pub mod eguchi;
pub mod linearize;
pub mod lojasiewicz;
pub mod suite;
pub mod svg;
pub mod variations;

pub use fields::{MetricField, ScalarField, SymTensorField, VectorField, WeightField};
pub use grid::Grid;
