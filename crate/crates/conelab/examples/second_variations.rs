//! Second-variation formulas at the round base against second finite
//! differences, and the conformal block operator's quadratic form.

use conelab::fields::{ScalarField, SymTensorField};
use conelab::functionals::{eval_a1, tangency_residual, BackgroundData, TangentPair};
use conelab::geometry::integrate;
use conelab::grid::Grid;
use conelab::harmonics::{random_band_scalar, random_band_sym2};
use conelab::linearize::*;
use conelab::rng::Rng;

fn main() {
    let bg = BackgroundData::new(Grid::sphere(24, 48).unwrap(), 3, 1.0).unwrap();
    let mut rng = Rng::seeded(3);
    let fourpi = 4.0 * std::f64::consts::PI;

    let mut x = TangentPair {
        h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
        v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
    };
    let resid = tangency_residual(&bg, &bg.base_pair(), &x);
    let vol = eval_a1(&bg, &bg.base_pair());
    for v in x.v.vals.iter_mut() {
        *v -= resid / vol;
    }
    let xp = TangentPair {
        h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
        v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
    };
    let a2 = second_variation_a(&bg, &x, &xp);
    let fa = fd_second_variation_a(&bg, &x, &xp);
    println!("weight-cubed second variation: formula {a2:.10e}, finite difference {fa:.10e}");
    let b2 = second_variation_b(&bg, &x, &xp);
    let fb = fd_second_variation_b(&bg, &x, &xp);
    println!("total-curvature second variation: formula {b2:.10e}, finite difference {fb:.10e}");

    // conformal sector
    let phi = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
    let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
    let lhs = integrate(
        &bg.grid,
        &ScalarField {
            vals: (0..bg.n_nodes()).map(|k| phi.vals[k] + v.vals[k]).collect(),
        },
        &bg.gbar,
    );
    for val in v.vals.iter_mut() {
        *val -= lhs / fourpi;
    }
    let sv = sv_conformal(&bg, &phi, &v).unwrap();
    println!("conformal second variation: {sv:.10e}");
    let block = ConformalBlock::new(&bg);
    println!(
        "block quadratic form times b_inf / (2-n): {:.10e}",
        bg.b_inf * block.quadratic_form(&phi, &v) / (2.0 - bg.n as f64)
    );
    println!("principal symbol determinant: {}", block.symbol_determinant());

    // mean-zero weight direction (the transverse-traceless sector at n = 3)
    let mut w = random_band_scalar(&bg.grid, 3, &mut rng, 0.1);
    let mean = integrate(&bg.grid, &w, &bg.gbar) / fourpi;
    for val in w.vals.iter_mut() {
        *val -= mean;
    }
    let tt = sv_transverse_traceless(&bg, &SymTensorField::zeros(bg.n_nodes()), &w).unwrap();
    let int_w2 = integrate(&bg.grid, &w.mul(&w), &bg.gbar);
    println!(
        "weight-only second variation: {tt:.10e} (closed form {:.10e})",
        6.0 * int_w2 / (2.0 - bg.n as f64)
    );
}
