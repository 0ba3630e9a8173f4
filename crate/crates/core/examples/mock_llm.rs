//! LLM-backed feedback against a scripted in-process backend: prompts,
//! reply parsing, and a full simulated session.

use std::sync::Arc;

use rulelab::agent::{run_with_source, Reporting};
use rulelab::feedback::{system_prompt, FeedbackCondition, LlmFeedback};
use rulelab::llm::{extract_triple, LlmClient, MockBackend, MockReply, ModelConfig};
use rulelab::rule_space::{Domain, HypothesisSpace, Rule, RuleTag};
use rulelab::seeding::seeded;

fn main() -> rulelab::error::Result<()> {
    let domain = Domain::monte_carlo();
    let truth: Rule = RuleTag::AllEven.into();
    println!("{}\n", system_prompt(FeedbackCondition::DefaultLlm, &truth, 3, domain)?);
    for reply in ["Try 8, 10, 12!", "How about (4 - 20 - 6)?", "no numbers here"] {
        println!("{reply:?} -> {:?}", extract_triple(reply, domain).map(|t| t.to_string()));
    }

    let backend = MockBackend::scripted(vec![
        MockReply::text("Interesting. Here's one: 12, 14, 16"),
        MockReply::text("Let me think... 40-2-18."),
    ]);
    let calls = backend.calls();
    let client = Arc::new(LlmClient::new(ModelConfig::new("mock://", "mock"), Box::new(backend))?);
    let space = Arc::new(HypothesisSpace::default_space(domain));
    let mut source = LlmFeedback::new(FeedbackCondition::DefaultLlm, client, truth, 3, domain)?;
    let t = run_with_source(&space, &mut source, 3, Reporting::Sampled, 1, &mut seeded(1))?;
    for (i, r) in t.rounds.iter().enumerate() {
        println!("round {}: shown {}, states {} at {:.1}", i + 1, r.presented, space.rule(r.reported).name(), r.confidence);
    }
    println!("{} backend calls", calls.load(std::sync::atomic::Ordering::SeqCst));
    Ok(())
}
