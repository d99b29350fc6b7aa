//! Acceptance suite: every exit criterion of the build, one test per
//! criterion, each printing a single pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`). Tolerances are pinned
//! here in code.
//!
//! The default working grid is 48 x 96 with harmonic degree 4; criterion 10
//! exercises the Ricci-flat instanton model and is a stretch goal that
//! happens to pass, so it is asserted like the rest.

use conelab::cone::{self, GreenProfile, Warp, WarpedModel};
use conelab::decay;
use conelab::eguchi::{self, EguchiHanson, EhGreen};
use conelab::fd;
use conelab::fields::{MetricField, ScalarField, SymTensorField};
use conelab::functionals::{self, BackgroundData, TangentPair};
use conelab::geometry::{self, l2_norm_scalar, l2_norm_sym2};
use conelab::grid::Grid;
use conelab::harmonics::{self, random_band_scalar, random_band_sym2};
use conelab::linearize::{self, BasisLabel, ConformalBlock};
use conelab::lojasiewicz::{self, ChartObjective, ObjectiveMap, PowerObjective};
use conelab::rng::Rng;

const N_LAT: usize = 48;
const N_LON: usize = 96;
const DEGREE: usize = 4;
const SEED: u64 = 20260808;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn background() -> BackgroundData {
    BackgroundData::new(Grid::sphere(N_LAT, N_LON).unwrap(), 3, 1.0).unwrap()
}

fn tangent_projected(bg: &BackgroundData, rng: &mut Rng, amp: f64) -> TangentPair {
    let mut x = TangentPair {
        h: random_band_sym2(&bg.grid, &bg.g0, 3, rng, amp),
        v: random_band_scalar(&bg.grid, 3, rng, amp),
    };
    let resid = functionals::tangency_residual(bg, &bg.base_pair(), &x);
    let vol = functionals::eval_a1(bg, &bg.base_pair());
    for v in x.v.vals.iter_mut() {
        *v -= resid / (bg.b_inf * vol);
    }
    x
}

#[test]
fn criterion_01_curvature_oracle() {
    let bg = background();
    let r = geometry::scalar_curvature(&bg.grid, &bg.g0);
    let sphere_err = r.vals.iter().fold(0.0f64, |m, v| m.max((v - 2.0).abs()));
    let tg = Grid::torus(16, 16, 1.0, 1.3).unwrap();
    let tm = geometry::flat_torus_metric(&tg, [1.2, 0.1, 0.9]).unwrap();
    let torus_err = geometry::scalar_curvature(&tg, &tm)
        .max_abs()
        .max(geometry::ricci(&tg, &tm).max_abs());
    verdict(
        "1 curvature oracle",
        sphere_err <= 1e-6 && torus_err <= 1e-10,
        &format!("round max |R - 2| = {sphere_err:.3e} <= 1e-6, flat chart {torus_err:.3e} <= 1e-10"),
    );
}

#[test]
fn criterion_02_base_values_and_chart() {
    let bg = background();
    let base = bg.base_pair();
    let fourpi = 4.0 * std::f64::consts::PI;
    let r_rel = (functionals::eval_r(&bg, &base) - bg.b_inf * bg.b_inf * fourpi).abs()
        / (bg.b_inf * bg.b_inf * fourpi);
    let mut rng = Rng::seeded(SEED);
    let mut worst_chart = 0.0f64;
    for _ in 0..5 {
        let x = tangent_projected(&bg, &mut rng, 0.04);
        let p = functionals::exp_chart(&bg, &x).unwrap();
        worst_chart = worst_chart.max(functionals::a1_residual(&bg, &p));
    }
    verdict(
        "2 base values",
        r_rel <= 1e-10 && worst_chart <= 1e-12,
        &format!("functional value relative error {r_rel:.3e} <= 1e-10, chart constraint {worst_chart:.3e} <= 1e-12"),
    );
}

#[test]
fn criterion_03_criticality() {
    let bg = background();
    let base = bg.base_pair();
    let g1 = functionals::project_gradient(&bg, &base).unwrap();
    let scale = functionals::l2_norm(&bg, &functionals::grad_a1(&bg, &base).unwrap());
    let value = functionals::l2_norm(&bg, &g1);
    verdict(
        "3 criticality",
        value <= 1e-8 * scale,
        &format!("constrained gradient {value:.3e} <= 1e-8 x {scale:.3}"),
    );
}

#[test]
fn criterion_04_variation_oracles() {
    // all six deformation formulas plus both functional first variations
    // match finite differences to 1e-6 relative (volume-weighted L2 norm)
    // on 10 seeded inputs each
    let bg = background();
    let grid = &bg.grid;
    let g0 = &bg.g0;
    let mut rng = Rng::seeded(SEED ^ 0x04);
    let n = grid.n_nodes();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let gpert = random_band_sym2(grid, g0, 3, &mut rng, 0.05);
        let g = MetricField::new(grid, g0.comp.add(&gpert)).unwrap();
        let h = random_band_sym2(grid, g0, 3, &mut rng, 0.2);
        let u = random_band_scalar(grid, 3, &mut rng, 0.5);
        let v = random_band_scalar(grid, 3, &mut rng, 0.5);
        let along = |t: f64| MetricField::new(grid, g.comp.axpy(t, &h)).unwrap();
        let rel_sym = |got: &SymTensorField, want: &[f64]| -> f64 {
            let mut diff = SymTensorField::zeros(n);
            let mut wf = SymTensorField::zeros(n);
            for k in 0..n {
                for c in 0..3 {
                    diff.vals[k][c] = got.vals[k][c] - want[3 * k + c];
                    wf.vals[k][c] = want[3 * k + c];
                }
            }
            l2_norm_sym2(grid, &g, &diff) / l2_norm_sym2(grid, &g, &wf).max(1e-14)
        };
        let rel_scal = |got: &ScalarField, want: &[f64]| -> f64 {
            let diff = ScalarField {
                vals: (0..n).map(|k| got.vals[k] - want[k]).collect(),
            };
            let wf = ScalarField { vals: want.to_vec() };
            l2_norm_scalar(grid, &g, &diff) / l2_norm_scalar(grid, &g, &wf).max(1e-14)
        };

        let fdv = fd::deriv1_vec(
            &mut |t| geometry::scalar_curvature(grid, &along(t)).vals,
            1e-3,
            1e-4,
        );
        worst = worst.max(rel_scal(&conelab::variations::dscalar_curvature(grid, &g, &h), &fdv));
        let fdv = fd::deriv1_vec(
            &mut |t| geometry::ricci(grid, &along(t)).vals.iter().flatten().copied().collect(),
            1e-3,
            1e-4,
        );
        worst = worst.max(rel_sym(&conelab::variations::dricci(grid, &g, &h), &fdv));
        let fdv = fd::deriv1_vec(
            &mut |t| {
                let ut = u.axpy_scalar(t, &v);
                geometry::hessian(grid, &along(t), &ut)
                    .vals
                    .iter()
                    .flatten()
                    .copied()
                    .collect()
            },
            1e-3,
            1e-4,
        );
        worst = worst.max(rel_sym(&conelab::variations::dhessian(grid, &g, &h, &u, &v), &fdv));
        let fdv = fd::deriv1_vec(
            &mut |t| {
                let gt = along(t);
                let ut = u.axpy_scalar(t, &v);
                let gu = geometry::gradient(grid, &gt, &ut);
                geometry::inner_vec(&gt, &gu, &gu).vals
            },
            1e-3,
            1e-4,
        );
        worst = worst.max(rel_scal(&conelab::variations::dnorm_gradient(grid, &g, &h, &u, &v), &fdv));
        let fdv = fd::deriv1_vec(
            &mut |t| {
                let gt = along(t);
                (0..n).map(|k| gt.sqrt_det(k) / g.sqrt_det(k)).collect()
            },
            1e-3,
            1e-4,
        );
        worst = worst.max(rel_scal(&conelab::variations::dvolume_form(&g, &h), &fdv));
        let fdv = fd::deriv1_vec(&mut |t| (0..n).flat_map(|k| along(t).inv(k)).collect(), 1e-3, 1e-4);
        worst = worst.max(rel_sym(&conelab::variations::dmetric_inverse(&g, &h), &fdv));
    }
    // functional first variations
    let mut worst_fv = 0.0f64;
    for _ in 0..10 {
        let dir = tangent_projected(&bg, &mut rng, 0.04);
        let at = tangent_projected(&bg, &mut rng, 0.03);
        let p = functionals::exp_chart(&bg, &at).unwrap();
        let along = |t: f64| {
            let comp = p.g.comp.axpy(t, &dir.h);
            let g = MetricField::new(grid, comp).unwrap();
            let w = conelab::fields::WeightField::new(
                p.w.vals
                    .iter()
                    .zip(&dir.v.vals)
                    .map(|(w, v)| w * (t * v).exp())
                    .collect(),
            )
            .unwrap();
            functionals::WeightedPair { g, w }
        };
        // derivative-relative with a 1e-2 floor: a directional derivative can
        // vanish for a given seed while the finite-difference noise floor
        // sits near 1e-10
        let fa = functionals::first_variation_a(&bg, &p, &dir);
        let fda = fd::deriv1(&mut |t| functionals::eval_a(&bg, &along(t)));
        worst_fv = worst_fv.max((fa - fda).abs() / fda.abs().max(1e-2));
        let fb = functionals::first_variation_b(&bg, &p, &dir);
        let fdb = fd::deriv1(&mut |t| functionals::eval_b(&bg, &along(t)));
        worst_fv = worst_fv.max((fb - fdb).abs() / fdb.abs().max(1e-2));
    }
    verdict(
        "4 variation oracles",
        worst <= 1e-6 && worst_fv <= 1e-6,
        &format!("deformation formulas {worst:.3e} <= 1e-6, functional variations {worst_fv:.3e} <= 1e-6"),
    );
}

#[test]
fn criterion_05_second_variations() {
    let bg = background();
    let mut rng = Rng::seeded(SEED ^ 0x05);
    let n = bg.n_nodes();
    let fourpi = 4.0 * std::f64::consts::PI;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = tangent_projected(&bg, &mut rng, 0.05);
        let xp = TangentPair {
            h: random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.05),
            v: random_band_scalar(&bg.grid, 3, &mut rng, 0.05),
        };
        worst = worst.max(fd::rel_err(
            linearize::second_variation_a(&bg, &x, &xp),
            linearize::fd_second_variation_a(&bg, &x, &xp),
        ));
        worst = worst.max(fd::rel_err(
            linearize::second_variation_b(&bg, &x, &xp),
            linearize::fd_second_variation_b(&bg, &x, &xp),
        ));
    }
    // transverse-traceless paths: on the 2-sphere cross-section the tensor
    // slot is empty (no nonzero divergence-free trace-free tensors exist),
    // so the ten seeded paths run through the weight slot
    let mut worst_tt = 0.0f64;
    for _ in 0..10 {
        let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.1);
        let mean = geometry::integrate(&bg.grid, &v, &bg.gbar) / fourpi;
        for val in v.vals.iter_mut() {
            *val -= mean;
        }
        let h = SymTensorField::zeros(n);
        let r2 = linearize::sv_transverse_traceless(&bg, &h, &v).unwrap();
        let x = TangentPair { h, v };
        let mut f =
            |t: f64| functionals::eval_r(&bg, &functionals::exp_chart(&bg, &x.scale(t)).unwrap());
        worst_tt = worst_tt.max(fd::rel_err(r2, fd::deriv2(&mut f)));
    }
    let mut worst_conf = 0.0f64;
    for _ in 0..10 {
        let phi = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
        let mut v = random_band_scalar(&bg.grid, 3, &mut rng, 0.08);
        let lhs = geometry::integrate(
            &bg.grid,
            &ScalarField {
                vals: (0..n).map(|k| phi.vals[k] + v.vals[k]).collect(),
            },
            &bg.gbar,
        );
        for val in v.vals.iter_mut() {
            *val -= lhs / fourpi;
        }
        let r2 = linearize::sv_conformal(&bg, &phi, &v).unwrap();
        let x = TangentPair {
            h: bg.gbar.comp.mul_scalar_field(&phi),
            v,
        };
        let mut f =
            |t: f64| functionals::eval_r(&bg, &functionals::exp_chart(&bg, &x.scale(t)).unwrap());
        worst_conf = worst_conf.max(fd::rel_err(r2, fd::deriv2(&mut f)));
    }
    let det = ConformalBlock::new(&bg).symbol_determinant();
    verdict(
        "5 second variations",
        worst <= 1e-5 && worst_tt <= 1e-5 && worst_conf <= 1e-5 && det == -1.0,
        &format!(
            "paths {worst:.3e} / tt {worst_tt:.3e} / conformal {worst_conf:.3e} <= 1e-5, symbol det {det}"
        ),
    );
}

#[test]
fn criterion_06_linearization_structure() {
    let bg = background();
    let basis = linearize::build_basis(&bg, DEGREE).unwrap();
    let op = linearize::assemble_l(&bg, &basis).unwrap();
    let sym = op.asymmetry();
    let gauge = op.diffeo_column_residual();
    let ttblock = op.tt_offdiagonal_residual();
    let mut rng = Rng::seeded(SEED ^ 0x06);
    let h = random_band_sym2(&bg.grid, &bg.g0, 3, &mut rng, 0.3);
    let split = linearize::york_decompose(&bg, &h, DEGREE, 1e-5).unwrap();
    verdict(
        "6 linearization structure",
        sym <= 1e-6 && gauge <= 1e-6 && ttblock <= 1e-5 && split.reconstruction_residual <= 1e-8,
        &format!(
            "symmetry {sym:.3e} <= 1e-6, gauge {gauge:.3e} <= 1e-6, tt block {ttblock:.3e} <= 1e-5 (dimension {}), york {:.3e} <= 1e-8",
            basis.count(BasisLabel::TransverseTraceless),
            split.reconstruction_residual
        ),
    );
}

#[test]
fn criterion_07_lojasiewicz_machinery() {
    let bg = background();
    let basis = linearize::build_basis(&bg, 2).unwrap();
    let obj = ChartObjective::new(&bg, &basis);
    let op = linearize::assemble_l(&bg, &basis).unwrap();
    let kernel = linearize::kernel_of_l(&op, 1e-4);
    let red = lojasiewicz::build_reduction(&obj, &op, &kernel).unwrap();
    let mut rng = Rng::seeded(SEED ^ 0x07);
    let mut worst_id = 0.0f64;
    for _ in 0..20 {
        let y = rng.ball(obj.dim(), 1e-2);
        let x = red.phi(&y).unwrap();
        for (a, b) in red.n_map(x.as_slice()).iter().zip(&y) {
            worst_id = worst_id.max((a - b).abs());
        }
        let x2 = rng.ball(obj.dim(), 1e-2);
        let back = red.phi(red.n_map(&x2).as_slice()).unwrap();
        for (a, b) in back.iter().zip(&x2) {
            worst_id = worst_id.max((a - b).abs());
        }
    }
    let est_q = lojasiewicz::estimate_exponent(
        &PowerObjective { dim: 6, power: 2.0 },
        None,
        0.1,
        200,
        SEED,
    )
    .unwrap();
    let est_4 = lojasiewicz::estimate_exponent(
        &PowerObjective { dim: 6, power: 4.0 },
        None,
        0.1,
        200,
        SEED,
    )
    .unwrap();
    let est = lojasiewicz::estimate_exponent(&obj, Some(&red), 1e-2, 200, SEED).unwrap();
    verdict(
        "7 lojasiewicz machinery",
        worst_id <= 1e-8
            && est_q.alpha_hat >= 0.95
            && (est_4.alpha_hat - 0.5).abs() <= 0.05
            && est.worst_ratio <= 1.0 + 1e-9,
        &format!(
            "inverse identities {worst_id:.3e} <= 1e-8, quadratic alpha {:.3}, quartic alpha {:.3}, base inequality worst ratio {:.6} (alpha_hat {:.3})",
            est_q.alpha_hat, est_4.alpha_hat, est.worst_ratio, est.alpha_hat
        ),
    );
}

#[test]
fn criterion_08_cone_models() {
    let bg = background();
    let m0 = WarpedModel::new(3, 0.3, 5.0, Warp::Euclidean).unwrap();
    let gp0 = GreenProfile::solve(&m0, (1.0, 1.0)).unwrap();
    let mut b_err = 0.0f64;
    for i in 0..40 {
        let s = 0.3 + 4.7 * i as f64 / 39.0;
        b_err = b_err.max((gp0.b(s) - s).abs());
    }
    let fourpi = 4.0 * std::f64::consts::PI;
    let a_err = (cone::eval_a_of_r(&gp0, 2.0).unwrap() - fourpi).abs() / fourpi;
    let q0 = cone::eval_q_of_r(&gp0, 1.0).unwrap().value.abs();

    let a = 0.9f64;
    let mc = WarpedModel::new(3, 0.3, 5.0, Warp::Cone { a }).unwrap();
    let gpc = GreenProfile::solve(&mc, (1.0, a * a)).unwrap();
    let binf_err = (gpc.b_inf_estimate() - 0.81).abs();
    let expect = 0.81 * 0.81 * fourpi;
    let ac_err = (cone::eval_a_of_r(&gpc, 1.3).unwrap() - expect).abs() / expect;

    let mw = WarpedModel::new(3, 0.4, 6.0, Warp::Bump { a: 1.0, eps: 0.05, center: 1.6, width: 0.8 })
        .unwrap();
    let gpw = GreenProfile::solve(&mw, (0.6, 0.6)).unwrap();
    let mut cross = 0.0f64;
    for r in [0.9, 1.1, 1.3] {
        cross = cross.max(cone::eval_r_levelset(&bg, &gpw, r).unwrap().difference_rel);
    }
    let mut general = 0.0f64;
    let mut corrected = 0.0f64;
    for s in [0.8, 1.2, 1.6, 2.0, 2.6] {
        let rep = cone::check_identities(&gpw, s);
        general = general.max(rep.max_general_residual());
        corrected = corrected.max(rep.max_residual());
    }
    verdict(
        "8 cone models",
        b_err <= 1e-10
            && a_err <= 1e-10
            && q0 <= 1e-12
            && binf_err <= 1e-9
            && ac_err <= 1e-9
            && cross <= 1e-8
            && general <= 1e-8
            && corrected <= 1e-6,
        &format!(
            "flat profile {b_err:.2e}, energies ({a_err:.2e}, {q0:.2e}), cone ({binf_err:.2e}, {ac_err:.2e}), cross-eval {cross:.2e} <= 1e-8, identities ({general:.2e} <= 1e-8, {corrected:.2e} <= 1e-6)"
        ),
    );
}

#[test]
fn criterion_09_defect_inequalities() {
    let bg = background();
    let family = cone::default_warp_family(3).unwrap();
    let radii = [1.0, 1.2, 1.4];
    let mut c4 = Vec::new();
    let mut c5 = Vec::new();
    let mut reports = Vec::new();
    for model in &family {
        let gp = GreenProfile::solve(model, (model.s0, model.s0)).unwrap();
        let mut m4: f64 = 0.0;
        let mut m5: f64 = 0.0;
        for &r in &radii {
            let rep = cone::check_property4(&bg, &gp, r).unwrap();
            m4 = m4.max(rep.c_gradient);
            m5 = m5.max(rep.c_value);
            reports.push(rep);
        }
        c4.push(m4);
        c5.push(m5);
    }
    let spread4 =
        c4.iter().cloned().fold(0.0, f64::max) / c4.iter().cloned().fold(f64::MAX, f64::min);
    let pos5: Vec<f64> = c5.iter().cloned().filter(|v| *v > 0.0).collect();
    let spread5 = if pos5.len() == c5.len() {
        pos5.iter().cloned().fold(0.0, f64::max) / pos5.iter().cloned().fold(f64::MAX, f64::min)
    } else {
        1.0
    };
    let c4max = c4.iter().cloned().fold(0.0, f64::max);
    let c5max = c5.iter().cloned().fold(0.0, f64::max);
    let mut violation = 0.0f64;
    for rep in &reports {
        violation = violation.max(rep.gradient_norm2 - c4max * rep.annulus_energy);
        violation = violation.max(rep.value_defect - c5max * rep.annulus_energy);
    }
    verdict(
        "9 defect inequalities",
        spread4 <= 10.0 && spread5 <= 10.0 && violation <= 1e-12,
        &format!(
            "fitted-constant spreads {spread4:.2} and {spread5:.2} <= 10, worst violation {violation:.2e}"
        ),
    );
}

#[test]
fn criterion_10_instanton_stretch() {
    let model = EguchiHanson::new(1.0, 1.3, 12.0).unwrap();
    let mut ric = 0.0f64;
    for r in [1.4, 1.8, 2.5, 4.0, 8.0, 11.0] {
        ric = ric.max(eguchi::ricci_residual(&model, r));
    }
    let gp = EhGreen::new(model);
    let levels: Vec<f64> = (0..12).map(|i| gp.b(1.5 + 9.0 * i as f64 / 11.0)).collect();
    let avals: Vec<f64> = levels
        .iter()
        .map(|&l| eguchi::eh_a_of_level(&gp, l).unwrap())
        .collect();
    let qvals: Vec<f64> = levels
        .iter()
        .map(|&l| eguchi::eh_q_of_level(&gp, l).unwrap())
        .collect();
    let mut increase = 0.0f64;
    for w in avals.windows(2).chain(qvals.windows(2)) {
        increase = increase.max(w[1] - w[0]);
    }
    let mut ap_dev = 0.0f64;
    for &l in &levels[1..5] {
        let direct = eguchi::eh_aprime(&gp, l).unwrap();
        let via = eguchi::eh_aprime_integrand(&gp, l).unwrap();
        ap_dev = ap_dev.max((direct - via).abs() / direct.abs());
    }
    verdict(
        "10 instanton (stretch)",
        ric <= 1e-6 && increase <= 1e-12 && ap_dev <= 0.01,
        &format!(
            "Ricci residual {ric:.2e} <= 1e-6, monotone (max increase {increase:.2e}), derivative formula within {ap_dev:.4} <= 0.01"
        ),
    );
}

#[test]
fn criterion_11_decay_engine() {
    // brute-force gap-bound validation on a 10^4-point grid
    let mut failures = 0usize;
    let mut checked = 0usize;
    for ia in 1..=20 {
        let a = ia as f64 / 21.0;
        for ib in (ia + 1)..=21 {
            let b = ib as f64 / 21.0;
            for ialpha in 1..=5 {
                let alpha = ialpha as f64 / 6.0;
                let need = a.powf(2.0 - alpha) / (b - a);
                for factor in [1.0, 1.2, 2.0, 5.0, 20.0, 100.0, 1e3, 1e5, 1e8, 1e12] {
                    checked += 1;
                    if !decay::alg_lemma(a, b, alpha, need * factor).unwrap().holds {
                        failures += 1;
                    }
                }
            }
        }
    }
    assert!(checked >= 10_000, "grid too small: {checked}");

    // extremal sequences verified to depth 10^4
    let mut decay_ok = true;
    for &alpha in &[0.3, 0.5, 0.7] {
        let seq = decay::extremal_sequence(alpha, 0.8, 0.9, 0, 10_001);
        let cert = decay::iterate_decay(&seq, alpha, 0.8, 0, 9_999).unwrap();
        let beta = alpha / (1.0 - alpha);
        decay_ok &= cert.verified && (cert.beta - beta).abs() < 1e-14;
        for j in (10..=9_999).step_by(13) {
            let q = seq.get(j + 1).unwrap();
            let bound = cert.power_constant * (j as f64).powf(-(beta + 1.0));
            decay_ok &= q <= bound * (1.0 + 1e-9);
        }
    }

    // reference series value to four digits
    let seq = decay::MonotoneSeq::power_law(1.0, 1.0, 1, 2_000_000);
    let sb = decay::series_lemma(&seq, 1.0, 1.0, 1, 1.0, 10).unwrap();
    let series_ok =
        (sb.partial_sum * 1e4).round() / 1e4 == 0.1952 && sb.bound == 0.2 && sb.verified;

    // envelope tail bound against direct summation
    let q = decay::MonotoneSeq::power_law(1e-4, 1.0, 1, 4000);
    let theta = decay::theta_from_q(&q, 0.1, 2.0).unwrap();
    let tsb = decay::sum_theta(&q, &theta, None, 1.0, 5).unwrap();

    // bootstrap end to end plus the three adversarial refusals
    let inst = decay::synthetic_instance(0.5, 0.01, 5, 60, 2.0, 0.1);
    let cert = decay::bootstrap_uniqueness(&inst).unwrap();
    let mut refusals = 0;
    let mut bad = inst.clone();
    bad.eps = 0.0;
    if matches!(
        decay::bootstrap_uniqueness(&bad),
        Err(decay::DecayError::EnergyDrop { .. })
    ) {
        refusals += 1;
    }
    let mut bad2 = inst.clone();
    bad2.closeness.values[2] = bad2.delta;
    if matches!(
        decay::bootstrap_uniqueness(&bad2),
        Err(decay::DecayError::SeedCloseness { j: 2, .. })
    ) {
        refusals += 1;
    }
    let mut bad3 = inst.clone();
    let mid = bad3.theta.values.len() / 2;
    bad3.theta.values[mid] *= 10.0;
    let expect_j = bad3.theta.j0 + mid as i64;
    if matches!(
        decay::bootstrap_uniqueness(&bad3),
        Err(decay::DecayError::RelationFails { j, .. }) if j == expect_j
    ) {
        refusals += 1;
    }
    verdict(
        "11 decay engine",
        failures == 0 && decay_ok && series_ok && tsb.verified && cert.verified && refusals == 3,
        &format!(
            "gap grid {checked} points / {failures} failures, extremal depth 10^4 ok {decay_ok}, series {:.4} <= {:.1}, tail bound ok {}, bootstrap ok {} with {refusals}/3 refusals",
            sb.partial_sum, sb.bound, tsb.verified, cert.verified
        ),
    );
}

#[test]
fn criterion_12_cli_determinism() {
    let exe = env!("CARGO_BIN_EXE_conelab");
    let dir_a = std::env::temp_dir().join("conelab_acc_a");
    let dir_b = std::env::temp_dir().join("conelab_acc_b");
    let _ = std::fs::remove_dir_all(&dir_a);
    let _ = std::fs::remove_dir_all(&dir_b);
    let run = |out: &std::path::Path| {
        std::process::Command::new(exe)
            .args([
                "run",
                "all",
                "--seed",
                "424242",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .expect("spawn CLI")
    };
    let out_a = run(&dir_a);
    let out_b = run(&dir_b);
    let mut identical = true;
    let mut names: Vec<String> = std::fs::read_dir(&dir_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"results.csv".to_string()));
    for name in &names {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        identical &= a == b;
    }
    let json_a = std::fs::read(dir_a.join("results.json")).unwrap();
    let all_passed = out_a.status.code() == Some(0) && out_b.status.code() == Some(0);

    // every record carries a nonempty anchor
    let records: Vec<conelab::suite::ResultRecord> =
        serde_json::from_slice(&json_a).expect("parse records");
    let anchors_ok = !records.is_empty() && records.iter().all(|r| !r.anchor.is_empty());

    // a failing configuration drives a nonzero exit code
    let dir_c = std::env::temp_dir().join("conelab_acc_c");
    let _ = std::fs::remove_dir_all(&dir_c);
    let cfg_path = std::env::temp_dir().join("conelab_acc_fail.cfg");
    std::fs::write(
        &cfg_path,
        "[global]\nseed = 424242\n\n[tolerances]\nround-scalar-curvature = 1e-30\n",
    )
    .unwrap();
    let out_c = std::process::Command::new(exe)
        .args([
            "run",
            "geometry-oracles",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            dir_c.to_str().unwrap(),
        ])
        .output()
        .expect("spawn CLI");
    let fail_coded = out_c.status.code() == Some(1);

    verdict(
        "12 cli determinism",
        identical && all_passed && anchors_ok && fail_coded,
        &format!(
            "byte-identical outputs {identical}, exit codes 0/0 {all_passed}, anchors on {} records, absurd tolerance exits 1: {fail_coded}",
            records.len()
        ),
    );
}
