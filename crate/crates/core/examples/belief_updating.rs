//! Posterior over the rule catalog after 2-4-6 and a few more triples.

use std::sync::Arc;

use rulelab::belief::BeliefState;
use rulelab::rule_space::{Domain, HypothesisSpace, Triple};

fn show(label: &str, b: &BeliefState) {
    println!("{label}");
    for (h, m) in b.masses().iter().enumerate() {
        println!("  {:<16} {m:.4}", b.space().rule(h).name());
    }
}

fn main() -> rulelab::error::Result<()> {
    let space = Arc::new(HypothesisSpace::default_space(Domain::exact()));
    let mut belief = BeliefState::init(Arc::clone(&space), Triple::SEED)?;
    show("after 2-4-6", &belief);
    for t in [Triple::new(4, 8, 10), Triple::new(10, 2, 6)] {
        belief = belief.update(t)?;
        show(&format!("after {t}"), &belief);
    }
    Ok(())
}
