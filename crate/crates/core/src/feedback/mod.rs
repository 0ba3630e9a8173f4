//! Feedback agents: given the participant's stated hypothesis, produce the
//! next triple.
//!
//! Two theory samplers draw from `p(d | truth)` and `p(d | h*)` without any
//! other constraint. The three rule-bound samplers used in the experiment
//! (confirming, disconfirming, random sequence) always stay inside the true
//! rule. When a confirming or disconfirming target set is empty, the agent
//! falls back to a truth sample and flags it.

mod llm;

pub use llm::{llm_feedback, system_prompt, LlmFeedback};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::rule_space::{Extension, HypothesisSpace, Rule, Triple};
use crate::seeding::LabRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FeedbackCondition {
    TheoryTruth,
    TheoryHypothesis,
    RuleConfirming,
    RuleDisconfirming,
    RandomSequence,
    DefaultLlm,
    AgreeableLlm,
}

impl FeedbackCondition {
    pub const ALL: [FeedbackCondition; 7] = [
        FeedbackCondition::TheoryTruth,
        FeedbackCondition::TheoryHypothesis,
        FeedbackCondition::RuleConfirming,
        FeedbackCondition::RuleDisconfirming,
        FeedbackCondition::RandomSequence,
        FeedbackCondition::DefaultLlm,
        FeedbackCondition::AgreeableLlm,
    ];

    /// The five conditions of the human experiment.
    pub const EXPERIMENT: [FeedbackCondition; 5] = [
        FeedbackCondition::RuleConfirming,
        FeedbackCondition::RuleDisconfirming,
        FeedbackCondition::RandomSequence,
        FeedbackCondition::DefaultLlm,
        FeedbackCondition::AgreeableLlm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeedbackCondition::TheoryTruth => "THEORY_TRUTH",
            FeedbackCondition::TheoryHypothesis => "THEORY_HYPOTHESIS",
            FeedbackCondition::RuleConfirming => "RULE_CONFIRMING",
            FeedbackCondition::RuleDisconfirming => "RULE_DISCONFIRMING",
            FeedbackCondition::RandomSequence => "RANDOM_SEQUENCE",
            FeedbackCondition::DefaultLlm => "DEFAULT_LLM",
            FeedbackCondition::AgreeableLlm => "AGREEABLE_LLM",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn needs_llm(&self) -> bool {
        matches!(self, FeedbackCondition::DefaultLlm | FeedbackCondition::AgreeableLlm)
    }
}

impl fmt::Display for FeedbackCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the participant told the agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Stated {
    /// Catalog index, when the statement maps onto a catalog rule.
    pub rule: Option<usize>,
    pub text: String,
}

impl Stated {
    pub fn rule(space: &HypothesisSpace, h: usize) -> Self {
        Stated { rule: Some(h), text: space.rule(h).describe().to_string() }
    }

    pub fn text(text: impl Into<String>, rule: Option<usize>) -> Self {
        Stated { rule, text: text.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feedback {
    pub triple: Triple,
    /// The target set was empty and a truth sample was substituted.
    pub fallback: bool,
    pub reply: String,
}

/// A triple with its provenance flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampled {
    pub triple: Triple,
    pub fallback: bool,
}

/// Uniform draw from the true rule's extension.
pub fn theory_truth_sample(truth: &Extension, rng: &mut LabRng) -> Triple {
    truth.sample(rng).expect("true rule has a non-empty extension")
}

/// `d ~ p(d | h*)` under the space's likelihood model.
pub fn theory_hypothesis_sample(space: &HypothesisSpace, h_star: usize, rng: &mut LabRng) -> Triple {
    space.sample_datum(h_star, rng)
}

/// Uniform over `ext(h*) ∩ ext(truth)`, else a flagged truth sample.
pub fn confirming_sample(hypothesis: &Extension, truth: &Extension, rng: &mut LabRng) -> Sampled {
    from_target(&hypothesis.intersection(truth), truth, rng)
}

/// Uniform over `ext(truth) \ ext(h*)`, else a flagged truth sample.
pub fn disconfirming_sample(hypothesis: &Extension, truth: &Extension, rng: &mut LabRng) -> Sampled {
    from_target(&truth.difference(hypothesis), truth, rng)
}

fn from_target(target: &Extension, truth: &Extension, rng: &mut LabRng) -> Sampled {
    match target.sample(rng) {
        Some(triple) => Sampled { triple, fallback: false },
        None => Sampled { triple: theory_truth_sample(truth, rng), fallback: true },
    }
}

pub const RANDOM_LIST_LEN: usize = 16;

/// The fixed list a random-sequence agent cycles through.
pub fn random_sequence_list(truth: &Extension, len: usize, rng: &mut LabRng) -> Vec<Triple> {
    (0..len).map(|_| theory_truth_sample(truth, rng)).collect()
}

/// Target sets for every catalog hypothesis against one true rule.
#[derive(Debug)]
pub struct FeedbackTables {
    space: Arc<HypothesisSpace>,
    true_rule: Rule,
    truth: Extension,
    confirm: Vec<Extension>,
    disconfirm: Vec<Extension>,
}

impl FeedbackTables {
    pub fn new(space: Arc<HypothesisSpace>, true_rule: Rule) -> Result<Self> {
        let truth = Extension::of(&true_rule, space.domain());
        if truth.is_empty() {
            return Err(LabError::InvalidRule(true_rule.name().to_string()));
        }
        let confirm = (0..space.len()).map(|h| space.extension(h).intersection(&truth)).collect();
        let disconfirm = (0..space.len()).map(|h| truth.difference(space.extension(h))).collect();
        Ok(FeedbackTables { space, true_rule, truth, confirm, disconfirm })
    }

    pub fn space(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn true_rule(&self) -> &Rule {
        &self.true_rule
    }

    pub fn truth(&self) -> &Extension {
        &self.truth
    }

    pub fn confirming(&self, h: usize, rng: &mut LabRng) -> Sampled {
        from_target(&self.confirm[h], &self.truth, rng)
    }

    pub fn disconfirming(&self, h: usize, rng: &mut LabRng) -> Sampled {
        from_target(&self.disconfirm[h], &self.truth, rng)
    }

    fn truth_fallback(&self, rng: &mut LabRng) -> Sampled {
        Sampled { triple: theory_truth_sample(&self.truth, rng), fallback: true }
    }
}

/// Anything that can answer a stated hypothesis with the next triple.
pub trait FeedbackSource {
    fn condition(&self) -> FeedbackCondition;

    fn next(&mut self, stated: &Stated, rng: &mut LabRng) -> Result<Feedback>;
}

/// Self-contained agent for every non-LLM condition.
#[derive(Debug)]
pub struct SamplerAgent {
    condition: FeedbackCondition,
    tables: Arc<FeedbackTables>,
    random_list: Vec<Triple>,
    cursor: usize,
}

impl SamplerAgent {
    /// For `RANDOM_SEQUENCE` the agent's list is drawn from `rng` here.
    pub fn new(condition: FeedbackCondition, tables: Arc<FeedbackTables>, rng: &mut LabRng) -> Result<Self> {
        if condition.needs_llm() {
            return Err(LabError::InvalidArgument(format!("{condition} needs an llm client")));
        }
        let random_list = if condition == FeedbackCondition::RandomSequence {
            random_sequence_list(&tables.truth, RANDOM_LIST_LEN, rng)
        } else {
            Vec::new()
        };
        Ok(SamplerAgent { condition, tables, random_list, cursor: 0 })
    }

    pub fn random_list(&self) -> &[Triple] {
        &self.random_list
    }

    /// Skip ahead in the random list, as when resuming a session.
    pub fn with_cursor(mut self, cursor: usize) -> Self {
        self.cursor = cursor;
        self
    }

    pub fn sample(&mut self, stated: Option<usize>, rng: &mut LabRng) -> Sampled {
        let t = &self.tables;
        match (self.condition, stated) {
            (FeedbackCondition::TheoryTruth, _) => Sampled { triple: theory_truth_sample(&t.truth, rng), fallback: false },
            (FeedbackCondition::TheoryHypothesis, Some(h)) => {
                Sampled { triple: theory_hypothesis_sample(&t.space, h, rng), fallback: false }
            }
            (FeedbackCondition::RuleConfirming, Some(h)) => t.confirming(h, rng),
            (FeedbackCondition::RuleDisconfirming, Some(h)) => t.disconfirming(h, rng),
            (FeedbackCondition::RandomSequence, _) => {
                let triple = self.random_list[self.cursor % self.random_list.len()];
                self.cursor += 1;
                Sampled { triple, fallback: false }
            }
            _ => t.truth_fallback(rng),
        }
    }
}

impl FeedbackSource for SamplerAgent {
    fn condition(&self) -> FeedbackCondition {
        self.condition
    }

    fn next(&mut self, stated: &Stated, rng: &mut LabRng) -> Result<Feedback> {
        let s = self.sample(stated.rule, rng);
        Ok(Feedback { triple: s.triple, fallback: s.fallback, reply: format!("Here is the next sequence: {}", s.triple) })
    }
}
