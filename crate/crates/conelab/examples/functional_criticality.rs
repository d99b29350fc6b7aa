//! The weighted functionals at and near the round base pair: base values,
//! vanishing of the constrained gradient, and the renormalized chart.

use conelab::functionals::*;
use conelab::grid::Grid;
use conelab::harmonics::{random_band_scalar, random_band_sym2};
use conelab::rng::Rng;

fn main() {
    let bg = BackgroundData::new(Grid::sphere(32, 64).unwrap(), 3, 1.0).unwrap();
    let base = bg.base_pair();
    let fourpi = 4.0 * std::f64::consts::PI;

    println!("A(base)  = {:.12}  (expect {fourpi:.12})", eval_a(&bg, &base));
    println!("B(base)  = {:.12}  (expect {:.12})", eval_b(&bg, &base), 2.0 * fourpi);
    println!("A1(base) = {:.12}  (expect {fourpi:.12})", eval_a1(&bg, &base));
    println!("R(base)  = {:.12}  (expect {fourpi:.12})", eval_r(&bg, &base));

    let g1 = project_gradient(&bg, &base).unwrap();
    let scale = l2_norm(&bg, &grad_a1(&bg, &base).unwrap());
    println!(
        "constrained gradient at the base: {:.3e} (constraint-gradient scale {scale:.3})",
        l2_norm(&bg, &g1)
    );

    // a small constraint-tangent direction through the chart
    let mut rng = Rng::seeded(1);
    let mut x = TangentPair {
        h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
        v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
    };
    let resid = tangency_residual(&bg, &base, &x);
    for v in x.v.vals.iter_mut() {
        *v -= resid / (bg.b_inf * fourpi);
    }
    let p = exp_chart(&bg, &x).unwrap();
    println!(
        "chart output constraint residual: {:.3e} (renormalization is exact)",
        a1_residual(&bg, &p)
    );
    println!("R along the chart direction: {:.12}", eval_r(&bg, &p));
}
