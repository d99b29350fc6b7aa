//! First-variation formulas against centered finite differences: scalar
//! curvature, Ricci, Hessian, and the constraint identities along a
//! volume-preserving path.

use conelab::fd;
use conelab::fields::MetricField;
use conelab::functionals::{exp_chart, tangency_residual, BackgroundData, TangentPair};
use conelab::geometry::{l2_norm_scalar, l2_norm_sym2, ricci, round_sphere_metric, scalar_curvature};
use conelab::grid::Grid;
use conelab::harmonics::{random_band_scalar, random_band_sym2};
use conelab::rng::Rng;
use conelab::variations::*;

fn main() {
    let grid = Grid::sphere(24, 48).unwrap();
    let g0 = round_sphere_metric(&grid, 1.0).unwrap();
    let mut rng = Rng::seeded(7);
    let gpert = random_band_sym2(&grid, &g0, 3, &mut rng, 0.05);
    let g = MetricField::new(&grid, g0.comp.add(&gpert)).unwrap();
    let h = random_band_sym2(&grid, &g0, 3, &mut rng, 0.2);
    let n = grid.n_nodes();

    let got = dscalar_curvature(&grid, &g, &h);
    let fdv = fd::deriv1_vec(
        &mut |t| scalar_curvature(&grid, &MetricField::new(&grid, g.comp.axpy(t, &h)).unwrap()).vals,
        1e-3,
        1e-4,
    );
    let diff = conelab::fields::ScalarField {
        vals: (0..n).map(|k| got.vals[k] - fdv[k]).collect(),
    };
    let want = conelab::fields::ScalarField { vals: fdv };
    println!(
        "scalar-curvature variation vs finite differences: relative L2 error {:.3e}",
        l2_norm_scalar(&grid, &g, &diff) / l2_norm_scalar(&grid, &g, &want)
    );

    let dric = dricci(&grid, &g, &h);
    let fdr = fd::deriv1_vec(
        &mut |t| {
            ricci(&grid, &MetricField::new(&grid, g.comp.axpy(t, &h)).unwrap())
                .vals
                .iter()
                .flatten()
                .copied()
                .collect()
        },
        1e-3,
        1e-4,
    );
    let mut dif2 = conelab::fields::SymTensorField::zeros(n);
    let mut wf2 = conelab::fields::SymTensorField::zeros(n);
    for k in 0..n {
        for c in 0..3 {
            dif2.vals[k][c] = dric.vals[k][c] - fdr[3 * k + c];
            wf2.vals[k][c] = fdr[3 * k + c];
        }
    }
    println!(
        "Ricci variation vs finite differences: relative L2 error {:.3e}",
        l2_norm_sym2(&grid, &g, &dif2) / l2_norm_sym2(&grid, &g, &wf2)
    );

    // constraint identities along a chart path
    let bg = BackgroundData::new(Grid::sphere(24, 48).unwrap(), 3, 1.0).unwrap();
    let mut x = TangentPair {
        h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
        v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
    };
    let resid = tangency_residual(&bg, &bg.base_pair(), &x);
    for v in x.v.vals.iter_mut() {
        *v -= resid / (4.0 * std::f64::consts::PI);
    }
    let eps = 1e-2;
    let sample = |t: f64| exp_chart(&bg, &x.scale(t)).unwrap();
    let path = PairPath {
        eps,
        pairs: [sample(-2.0 * eps), sample(-eps), sample(0.0), sample(eps), sample(2.0 * eps)],
    };
    let (r1, r2) = constraint_derivatives(&bg, &path).unwrap();
    println!("constraint residuals along the path: first {r1:.3e}, second {r2:.3e}");
}
