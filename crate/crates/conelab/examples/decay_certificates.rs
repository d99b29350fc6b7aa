//! The sequence engine: gap bounds, extremal decay certificates, the
//! weighted difference-series bound, distance envelopes, and tail sums.

use conelab::decay::*;

fn main() {
    // the corrected two-branch gap constant on the reference case
    let r = alg_lemma(0.25, 0.5, 0.5, 0.5).unwrap();
    println!(
        "gap bound at (1/4, 1/2, alpha 1/2, C' 1/2): lhs {:.6}, constant {:.6}, holds {}",
        r.lhs, r.constant, r.holds
    );
    println!("(the single-branch constant 1.0 would fail here: lhs < 1)");

    for alpha in [0.3, 0.5, 0.7] {
        let seq = extremal_sequence(alpha, 0.8, 0.9, 0, 2000);
        let cert = iterate_decay(&seq, alpha, 0.8, 0, 1998).unwrap();
        println!(
            "alpha {alpha}: beta {:.4}, per-step constant {:.4}, final {:.3e} <= bound {:.3e}, verified {}",
            cert.beta, cert.step_constant, cert.final_value, cert.final_bound, cert.verified
        );
    }

    let seq = MonotoneSeq::power_law(1.0, 1.0, 1, 2_000_000);
    let sb = series_lemma(&seq, 1.0, 1.0, 1, 1.0, 10).unwrap();
    println!(
        "difference series: partial {:.6} + tail {:.2e} <= bound {:.6} ({})",
        sb.partial_sum, sb.tail_estimate, sb.bound, sb.verified
    );

    let q = MonotoneSeq::power_law(1e-4, 1.0, 1, 4000);
    let theta = theta_from_q(&q, 0.1, 2.0).unwrap();
    let tsb = sum_theta(&q, &theta, None, 1.0, 5).unwrap();
    println!(
        "envelope tail: direct {:.4e} <= bound {:.4e} with decay power {:.4} ({})",
        tsb.direct_sum, tsb.bound, tsb.beta_bar, tsb.verified
    );
    println!(
        "chained annulus distance over [0, 59] of a geometric envelope: {:.4}",
        cauchy_annuli(
            &ThetaSeq { j0: 0, values: (0..60).map(|j| 0.5f64.powi(j)).collect(), mu: 0.1, c_mu: 1.0 },
            0,
            59
        )
    );
}
