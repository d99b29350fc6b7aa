//! Radial models and their level-set energies: the distance coordinate on
//! flat space, the exact cone values, monotone profiles on a warped model,
//! and the two-route evaluation of the level functional.

use conelab::cone::*;
use conelab::functionals::BackgroundData;
use conelab::grid::Grid;

fn main() {
    let fourpi = 4.0 * std::f64::consts::PI;

    let m0 = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
    let gp0 = GreenProfile::solve(&m0, (1.0, 1.0)).unwrap();
    println!(
        "euclidean: b(2.0) = {:.12} (expect 2), A = {:.12} (expect {fourpi:.12})",
        gp0.b(2.0),
        eval_a_of_r(&gp0, 2.0).unwrap()
    );

    let a = 0.9;
    let mc = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a }).unwrap();
    let gpc = GreenProfile::solve(&mc, (1.0, a * a)).unwrap();
    println!(
        "cone slope {a}: asymptotic slope {:.6} (expect {:.6}), A = {:.10} (expect {:.10})",
        gpc.b_inf_estimate(),
        a * a,
        eval_a_of_r(&gpc, 1.3).unwrap(),
        a.powi(4) * fourpi,
    );

    let m = WarpedModel::new(3, 0.4, 6.0, Warp::Bump { a: 1.0, eps: 0.05, center: 1.6, width: 0.8 })
        .unwrap();
    let gp = GreenProfile::solve(&m, (0.6, 0.6)).unwrap();
    println!("\nwarped model (bump): s, b, |grad b|, A(b), Q(b)");
    for i in 0..10 {
        let s = 0.7 + 4.6 * i as f64 / 9.0;
        let b = gp.b(s);
        let aval = eval_a_of_r(&gp, b).unwrap();
        let q = eval_q_of_r(&gp, b).unwrap();
        println!("  {s:.3}  {b:.6}  {:.6}  {aval:.8}  {:.3e}", gp.bp(s), q.value);
    }

    let bg = BackgroundData::new(Grid::sphere(16, 32).unwrap(), 3, 1.0).unwrap();
    let rep = eval_r_levelset(&bg, &gp, 1.1).unwrap();
    println!(
        "\nlevel functional two ways at b = 1.1: quadrature {:.10}, closed form {:.10} (difference {:.2e})",
        rep.via_functional, rep.via_level_formula, rep.difference_rel
    );

    // per-member fitted constants over the default family
    let family = default_warp_family(3).unwrap();
    println!("\nfamily fitted constants (gradient, value) at R = 1.2:");
    for model in &family {
        let gpf = GreenProfile::solve(model, (model.s0, model.s0)).unwrap();
        let rep = check_property4(&bg, &gpf, 1.2).unwrap();
        println!("  c_gradient = {:.4}, c_value = {:.4}", rep.c_gradient, rep.c_value);
    }
}
