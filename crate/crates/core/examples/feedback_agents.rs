//! What each non-LLM feedback agent shows a learner who states ARITH_PROG_2.

use std::sync::Arc;

use rulelab::feedback::{FeedbackCondition, FeedbackTables, SamplerAgent};
use rulelab::rule_space::{Domain, HypothesisSpace, RuleTag};
use rulelab::seeding::seeded;

fn main() -> rulelab::error::Result<()> {
    let space = Arc::new(HypothesisSpace::default_space(Domain::monte_carlo()));
    let tables = Arc::new(FeedbackTables::new(Arc::clone(&space), RuleTag::AllEven.into())?);
    let stated = space.require_index(&RuleTag::ArithProg2.into())?;
    let mut rng = seeded(3);
    for condition in FeedbackCondition::ALL.into_iter().filter(|c| !c.needs_llm()) {
        let mut agent = SamplerAgent::new(condition, Arc::clone(&tables), &mut rng)?;
        let shown: Vec<String> = (0..5)
            .map(|_| {
                let s = agent.sample(Some(stated), &mut rng);
                if s.fallback { format!("{}*", s.triple) } else { s.triple.to_string() }
            })
            .collect();
        println!("{:<20} {}", condition.name(), shown.join("  "));
    }
    println!("(* = target set empty, truth sample substituted)");
    Ok(())
}
