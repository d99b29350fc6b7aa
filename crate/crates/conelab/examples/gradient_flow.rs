//! Safeguarded steepest descent: exact geometric contraction on the
//! synthetic quadratic, monotone decrease on the actual objective.

use conelab::functionals::BackgroundData;
use conelab::grid::Grid;
use conelab::linearize::build_basis;
use conelab::lojasiewicz::*;
use conelab::rng::Rng;

fn main() {
    let quad = PowerObjective { dim: 4, power: 2.0 };
    let step = 0.05;
    let report = gradient_flow(&quad, &[0.3, -0.2, 0.1, 0.05], step, 50);
    println!(
        "synthetic quadratic: monotone {}, contraction per step {:.8} (exact {:.8})",
        report.monotone,
        report.mean_ratio,
        (1.0 - 2.0 * step) * (1.0 - 2.0 * step)
    );

    let bg = BackgroundData::new(Grid::sphere(16, 32).unwrap(), 3, 1.0).unwrap();
    let basis = build_basis(&bg, 2).unwrap();
    let obj = ChartObjective::new(&bg, &basis);
    let mut rng = Rng::seeded(99);
    let x0 = rng.ball(obj.dim(), 1e-2);
    let actual = gradient_flow(&obj, &x0, 0.02, 30);
    println!(
        "round-base objective: monotone {}, step halvings {}, values {:.12} -> {:.12}",
        actual.monotone,
        actual.halvings,
        actual.values.first().unwrap(),
        actual.values.last().unwrap()
    );
}
