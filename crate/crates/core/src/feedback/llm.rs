use std::sync::Arc;

use super::{Feedback, FeedbackCondition, FeedbackSource, Stated};
use crate::error::{LabError, Result};
use crate::llm::{extract_triple, ChatMessage, LlmClient};
use crate::rule_space::{Domain, Rule, Triple};
use crate::seeding::LabRng;

const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompts/default_llm.txt");
const AGREEABLE_TEMPLATE: &str = include_str!("../../assets/prompts/agreeable_llm.txt");

/// Re-asks after an unparseable reply, on top of the first request.
pub const EXTRACTION_RETRIES: u32 = 2;

pub fn system_prompt(condition: FeedbackCondition, true_rule: &Rule, rounds: usize, domain: Domain) -> Result<String> {
    let template = match condition {
        FeedbackCondition::DefaultLlm => DEFAULT_TEMPLATE,
        FeedbackCondition::AgreeableLlm => AGREEABLE_TEMPLATE,
        other => return Err(LabError::InvalidArgument(format!("{other} has no system prompt"))),
    };
    Ok(template
        .replace("{true_rule}", true_rule.describe())
        .replace("{rounds}", &rounds.to_string())
        .replace("{max_value}", &domain.max_value().to_string())
        .trim_end()
        .to_string())
}

/// Ask the model for the next sequence given the conversation so far.
///
/// Returns the extracted triple and the full reply text.
pub fn llm_feedback(
    condition: FeedbackCondition,
    transcript: &[ChatMessage],
    client: &LlmClient,
    true_rule: &Rule,
    rounds: usize,
    domain: Domain,
) -> Result<(Triple, String)> {
    let mut messages = Vec::with_capacity(transcript.len() + 1);
    messages.push(ChatMessage::system(system_prompt(condition, true_rule, rounds, domain)?));
    messages.extend_from_slice(transcript);
    let mut last_error = String::new();
    for _ in 0..=EXTRACTION_RETRIES {
        let reply = client.complete(&messages)?;
        match extract_triple(&reply, domain) {
            Ok(t) => return Ok((t, reply)),
            Err(e @ (LabError::Extraction(_) | LabError::OutOfDomain(..))) => last_error = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(LabError::LlmProtocol(format!(
        "no usable triple after {} attempts: {last_error}",
        EXTRACTION_RETRIES + 1
    )))
}

/// An LLM-backed agent holding one session's conversation.
pub struct LlmFeedback {
    condition: FeedbackCondition,
    client: Arc<LlmClient>,
    true_rule: Rule,
    rounds: usize,
    domain: Domain,
    transcript: Vec<ChatMessage>,
}

impl LlmFeedback {
    pub fn new(
        condition: FeedbackCondition,
        client: Arc<LlmClient>,
        true_rule: Rule,
        rounds: usize,
        domain: Domain,
    ) -> Result<Self> {
        if !condition.needs_llm() {
            return Err(LabError::InvalidArgument(format!("{condition} is not an llm condition")));
        }
        let transcript = vec![ChatMessage::assistant(format!("The first sequence is {}.", Triple::SEED))];
        Ok(LlmFeedback { condition, client, true_rule, rounds, domain, transcript })
    }

    /// Resume from an earlier conversation (opening line included).
    pub fn with_transcript(mut self, transcript: Vec<ChatMessage>) -> Self {
        self.transcript = transcript;
        self
    }

    pub fn transcript(&self) -> &[ChatMessage] {
        &self.transcript
    }
}

impl FeedbackSource for LlmFeedback {
    fn condition(&self) -> FeedbackCondition {
        self.condition
    }

    fn next(&mut self, stated: &Stated, _rng: &mut LabRng) -> Result<Feedback> {
        self.transcript.push(ChatMessage::user(format!("My current guess about the rule: {}", stated.text)));
        let (triple, reply) =
            llm_feedback(self.condition, &self.transcript, &self.client, &self.true_rule, self.rounds, self.domain)?;
        self.transcript.push(ChatMessage::assistant(reply.clone()));
        Ok(Feedback { triple, fallback: false, reply })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockBackend, MockReply, ModelConfig};
    use crate::rule_space::RuleTag;
    use crate::seeding::seeded;
    use std::sync::atomic::Ordering;

    fn client(mock: MockBackend) -> LlmClient {
        let cfg = ModelConfig { retry_limit: 0, backoff_base_ms: 1, ..ModelConfig::new("mock://", "mock") };
        LlmClient::new(cfg, Box::new(mock)).unwrap()
    }

    fn ask(condition: FeedbackCondition, mock: MockBackend) -> Result<(Triple, String)> {
        let c = client(mock);
        let transcript = [ChatMessage::user("My guess: numbers go up by 2")];
        llm_feedback(condition, &transcript, &c, &RuleTag::AllEven.into(), 3, Domain::monte_carlo())
    }

    #[test]
    fn default_condition_extracts_triple() {
        let (t, reply) = ask(FeedbackCondition::DefaultLlm, MockBackend::scripted(vec![MockReply::text("Try 8, 10, 12")])).unwrap();
        assert_eq!(t, Triple::new(8, 10, 12));
        assert_eq!(reply, "Try 8, 10, 12");
    }

    #[test]
    fn agreeable_condition_extracts_triple() {
        let mock = MockBackend::scripted(vec![MockReply::text("What a brilliant insight! Here's 12-14-16.")]);
        let (t, _) = ask(FeedbackCondition::AgreeableLlm, mock).unwrap();
        assert_eq!(t, Triple::new(12, 14, 16));
    }

    #[test]
    fn digitless_reply_fails_after_two_retries() {
        let mock = MockBackend::scripted(vec![MockReply::text("I agree with your rule!")]);
        let calls = mock.calls();
        let err = ask(FeedbackCondition::DefaultLlm, mock).unwrap_err();
        assert!(matches!(err, LabError::LlmProtocol(_)));
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn transport_failure_surfaces() {
        let err = ask(FeedbackCondition::DefaultLlm, MockBackend::scripted(vec![MockReply::Fail])).unwrap_err();
        assert!(matches!(err, LabError::LlmTransport { .. }));
    }

    #[test]
    fn prompts_differ_and_carry_the_rule() {
        let rule: Rule = RuleTag::AllEven.into();
        let d = Domain::monte_carlo();
        let a = system_prompt(FeedbackCondition::DefaultLlm, &rule, 3, d).unwrap();
        let b = system_prompt(FeedbackCondition::AgreeableLlm, &rule, 3, d).unwrap();
        assert_ne!(a, b);
        assert!(a.contains(rule.describe()) && a.contains("50"));
        assert!(!a.contains('{'));
        assert!(system_prompt(FeedbackCondition::RuleConfirming, &rule, 3, d).is_err());
    }

    #[test]
    fn agent_keeps_the_conversation() {
        let mock = MockBackend::scripted(vec![MockReply::text("8-10-12"), MockReply::text("20-22-24")]);
        let requests = mock.requests();
        let mut agent = LlmFeedback::new(
            FeedbackCondition::DefaultLlm,
            Arc::new(client(mock)),
            RuleTag::AllEven.into(),
            3,
            Domain::monte_carlo(),
        )
        .unwrap();
        let mut rng = seeded(0);
        let f1 = agent.next(&Stated::text("goes up by 2", None), &mut rng).unwrap();
        let f2 = agent.next(&Stated::text("even numbers", None), &mut rng).unwrap();
        assert_eq!((f1.triple, f2.triple), (Triple::new(8, 10, 12), Triple::new(20, 22, 24)));
        assert_eq!(agent.transcript().len(), 5);
        let sent = requests.lock().unwrap();
        assert_eq!(sent[1].messages.len(), 5);
        assert_eq!(sent[1].messages[0].role, crate::llm::Role::System);
    }
}
