//! The level-set identity battery for the trace-free Hessian of b^2:
//! metric-general identities at round-off, curvature-corrected identities on
//! warped models, collapsing to their uncorrected form on flat space.

use conelab::cone::*;

fn main() {
    let m0 = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
    let gp0 = GreenProfile::solve(&m0, (1.0, 1.0)).unwrap();
    let rep0 = check_identities(&gp0, 2.0);
    println!("euclidean, all identities: max residual {:.3e}", rep0.max_residual());

    let m = WarpedModel::new(3, 0.3, 5.0, Warp::Bump { a: 1.0, eps: 0.08, center: 1.6, width: 0.7 })
        .unwrap();
    let gp = GreenProfile::solve(&m, (0.5, 0.5)).unwrap();
    println!("\nwarped model residuals by radius:");
    println!("  s     general   corrected");
    for s in [0.8, 1.2, 1.6, 2.0, 2.6] {
        let rep = check_identities(&gp, s);
        println!(
            "  {s:.1}   {:.2e}  {:.2e}",
            rep.max_general_residual(),
            rep.max_residual()
        );
    }

    let rep = check_identities(&gp, 1.6);
    println!("\nper-identity residuals at s = 1.6:");
    println!("  gradient of |grad b|^2:      {:.3e}", rep.gradient_identity);
    println!("  unit-gradient form:          {:.3e}", rep.gradient_unit_identity);
    println!("  divergence (Ricci-corrected): {:.3e}", rep.divergence_identity);
    println!("  Laplacian (Ricci-corrected):  {:.3e}", rep.laplacian_identity);
    println!("  second fundamental form:     {:.3e}", rep.second_fundamental_identity);
    println!("  norm decomposition:          {:.3e}", rep.decomposition_identity);
    println!("  umbilic block:               {:.3e}", rep.umbilic_identity);
    println!("  level scalar (Gauss):        {:.3e}", rep.level_scalar_identity);
    println!("  level Ricci (Gauss):         {:.3e}", rep.level_ricci_identity);
}
