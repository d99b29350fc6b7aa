//! Curvature oracles on the sphere and the flat chart: the round metric has
//! scalar curvature 2, the flat torus has none, and a conformal change obeys
//! the two-dimensional curvature formula.

use conelab::fields::{MetricField, ScalarField, SymTensorField};
use conelab::geometry::*;
use conelab::grid::Grid;

fn main() {
    let grid = Grid::sphere(32, 64).unwrap();
    let g0 = round_sphere_metric(&grid, 1.0).unwrap();

    let r = scalar_curvature(&grid, &g0);
    let worst = r.vals.iter().fold(0.0f64, |m, v| m.max((v - 2.0).abs()));
    println!("round unit sphere: max |R - 2| = {worst:.3e}");
    println!(
        "round unit sphere: area = {:.12} (4 pi = {:.12})",
        volume(&grid, &g0),
        4.0 * std::f64::consts::PI
    );

    let rho = 1.7;
    let grho = round_sphere_metric(&grid, rho).unwrap();
    let rrho = scalar_curvature(&grid, &grho);
    println!(
        "radius {rho}: max |R - 2/rho^2| = {:.3e}",
        rrho.vals
            .iter()
            .fold(0.0f64, |m, v| m.max((v - 2.0 / (rho * rho)).abs()))
    );

    let tg = Grid::torus(16, 16, 1.0, 1.3).unwrap();
    let tm = flat_torus_metric(&tg, [1.2, 0.1, 0.9]).unwrap();
    println!(
        "flat chart: max |curvature| = {:.3e}",
        scalar_curvature(&tg, &tm).max_abs()
    );

    // conformal factor exp(2u) with a low harmonic u
    let u = ScalarField::from_fn(&grid, |t, p| 0.15 * t.sin() * p.cos());
    let comp = SymTensorField {
        vals: g0
            .comp
            .vals
            .iter()
            .zip(&u.vals)
            .map(|(c, v)| {
                let f = (2.0 * v).exp();
                [f * c[0], f * c[1], f * c[2]]
            })
            .collect(),
    };
    let gc = MetricField::new(&grid, comp).unwrap();
    let rc = scalar_curvature(&grid, &gc);
    let lap = laplacian(&grid, &g0, &u);
    let mut conf = 0.0f64;
    for k in 0..grid.n_nodes() {
        let expect = (-2.0 * u.vals[k]).exp() * (2.0 - 2.0 * lap.vals[k]);
        conf = conf.max((rc.vals[k] - expect).abs());
    }
    println!("conformal change: max deviation from the closed form = {conf:.3e}");
}
