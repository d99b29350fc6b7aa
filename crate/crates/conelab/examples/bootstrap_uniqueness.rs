//! End-to-end bootstrap certification on a forward-generated instance, plus
//! the refusal behavior on three broken instances.

use conelab::decay::*;

fn main() {
    let inst = synthetic_instance(0.5, 0.01, 5, 60, 2.0, 0.1);
    let cert = bootstrap_uniqueness(&inst).unwrap();
    println!(
        "certified: {} induction steps, propagated budget {:.3e}, decay power {:.4}",
        cert.steps.len(),
        cert.propagated_budget,
        cert.beta_bar
    );
    for step in cert.steps.iter().take(3) {
        println!(
            "  step {}: budget {:.3e} -> extended {:.3e} -> improved {:.3e}",
            step.k, step.budget_in, step.extended_budget, step.budget_out
        );
    }
    println!("  ...");
    let (j, bound) = *cert.convergence_bounds.last().unwrap();
    println!("  convergence bound at scale index {j}: {bound:.3e}");

    // three broken instances refuse at the right step
    let mut bad = inst.clone();
    bad.eps = 0.0;
    println!("\nbroken energy drop:   {}", bootstrap_uniqueness(&bad).unwrap_err());
    let mut bad2 = inst.clone();
    bad2.closeness.values[2] = bad2.delta;
    println!("broken seed closeness: {}", bootstrap_uniqueness(&bad2).unwrap_err());
    let mut bad3 = inst.clone();
    let mid = bad3.theta.values.len() / 2;
    bad3.theta.values[mid] *= 10.0;
    println!("broken drop relation:  {}", bootstrap_uniqueness(&bad3).unwrap_err());
}
