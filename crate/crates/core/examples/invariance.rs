//! Hypothesis-conditioned data leave the expected posterior where it started.

use std::sync::Arc;

use rulelab::belief::BeliefState;
use rulelab::rule_space::{Domain, HypothesisSpace, Triple};
use rulelab::theory::{calibrate_tv_tolerance, exact_expected_posterior, invariance_sweep, monte_carlo_invariance};

fn main() -> rulelab::error::Result<()> {
    let exact = Arc::new(HypothesisSpace::default_space(Domain::exact()));
    let r = exact_expected_posterior(&exact, Triple::SEED)?;
    println!("{:<16} {:>10} {:>10}", "rule", "p(h|d0)", "E[p'(h)]");
    for h in 0..exact.len() {
        println!("{:<16} {:>10.6} {:>10.6}", exact.rule(h).name(), r.input_posterior[h], r.expected_posterior[h]);
    }
    let sweep = invariance_sweep(&exact)?;
    println!("worst deviation over {} starting triples: {:.2e} at {}", sweep.checked, sweep.max_abs_deviation, sweep.worst_d0);

    let space = Arc::new(HypothesisSpace::default_space(Domain::monte_carlo()));
    let p0 = BeliefState::init(Arc::clone(&space), Triple::SEED)?.masses();
    let tv = monte_carlo_invariance(&space, Triple::SEED, 3, 2000, 1)?;
    let tol = calibrate_tv_tolerance(&p0, 2000, 500, 0.99, 2);
    println!("2000 simulated learners, 3 rounds: TV {tv:.4} (99th percentile of direct draws {tol:.4})");
    Ok(())
}
