//! Cross-entropy of each catalog rule against ALL_EVEN, with sampled rates.

use rulelab::rule_space::{Domain, HypothesisSpace, RuleTag};
use rulelab::seeding::seeded;
use rulelab::theory::{cross_entropy_table, log_likelihood_rate};

fn main() -> rulelab::error::Result<()> {
    let space = HypothesisSpace::default_space(Domain::exact());
    let truth = RuleTag::AllEven.into();
    let table = cross_entropy_table(&space, &truth)?;
    let mut rng = seeded(9);
    for (h, e) in table.entries.iter().enumerate() {
        if e.nats.is_finite() {
            let rate = log_likelihood_rate(&space, &truth, h, 10_000, &mut rng)?;
            println!("{:<16} {:>8.4} nats   sampled rate {:>8.4}", e.rule, e.nats, rate);
        } else {
            println!("{:<16} {:>8}", e.rule, "inf");
        }
    }
    if let Some(h) = table.argmin() {
        println!("minimum: {} ({:.6}; ln 125 = {:.6})", space.rule(h).name(), table.value(h), 125f64.ln());
    }
    Ok(())
}
