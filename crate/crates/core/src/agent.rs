//! A simulated Bayesian participant playing the multi-round task.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::BeliefState;
use crate::error::{LabError, Result};
use crate::feedback::{FeedbackCondition, FeedbackSource, FeedbackTables, SamplerAgent, Stated};
use crate::rule_space::{HypothesisSpace, Rule, Triple};
use crate::seeding::{seeded, LabRng};

/// How the agent picks the hypothesis it states each round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reporting {
    /// A draw from the current posterior.
    #[default]
    Sampled,
    /// The posterior mode (lowest catalog index on ties).
    Modal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub presented: Triple,
    /// Catalog index of the stated hypothesis.
    pub reported: usize,
    /// `100 * posterior mass` of the stated hypothesis when it was stated.
    pub confidence: f64,
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTrajectory {
    pub condition: FeedbackCondition,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    /// Set when an error cut the run short; `rounds` holds what completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl AgentTrajectory {
    pub fn is_complete(&self, rounds: usize) -> bool {
        self.aborted.is_none() && self.rounds.len() == rounds
    }

    pub fn final_round(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }
}

fn report(belief: &BeliefState, reporting: Reporting, rng: &mut LabRng) -> usize {
    match reporting {
        Reporting::Sampled => belief.sample_hypothesis(rng),
        Reporting::Modal => belief.map_hypothesis(),
    }
}

/// Play `rounds` rounds against `source`.
///
/// Round 1 presents 2-4-6. Each later round asks the source for a datum given
/// the previously stated hypothesis, updates, and states a new hypothesis.
/// Errors during play end the trajectory early with `aborted` set.
pub fn run_with_source(
    space: &Arc<HypothesisSpace>,
    source: &mut dyn FeedbackSource,
    rounds: usize,
    reporting: Reporting,
    seed: u64,
    rng: &mut LabRng,
) -> Result<AgentTrajectory> {
    run_from(space, source, Triple::SEED, rounds, reporting, seed, rng)
}

/// As [`run_with_source`], with `d0` in place of 2-4-6.
pub fn run_from(
    space: &Arc<HypothesisSpace>,
    source: &mut dyn FeedbackSource,
    d0: Triple,
    rounds: usize,
    reporting: Reporting,
    seed: u64,
    rng: &mut LabRng,
) -> Result<AgentTrajectory> {
    if rounds == 0 {
        return Err(LabError::InvalidArgument("round count must be at least 1".into()));
    }
    let mut traj = AgentTrajectory { condition: source.condition(), seed, rounds: Vec::with_capacity(rounds), aborted: None };
    let mut belief = match BeliefState::init(Arc::clone(space), d0) {
        Ok(b) => b,
        Err(e) => {
            traj.aborted = Some(e.to_string());
            return Ok(traj);
        }
    };
    let mut stated = report(&belief, reporting, rng);
    traj.rounds.push(RoundRecord {
        presented: d0,
        reported: stated,
        confidence: 100.0 * belief.mass(stated),
        fallback: false,
        reply: None,
    });
    for _ in 1..rounds {
        let step = source
            .next(&Stated::rule(space, stated), rng)
            .and_then(|fb| belief.update(fb.triple).map(|b| (fb, b)));
        let (fb, next) = match step {
            Ok(x) => x,
            Err(e) => {
                traj.aborted = Some(e.to_string());
                return Ok(traj);
            }
        };
        belief = next;
        stated = report(&belief, reporting, rng);
        traj.rounds.push(RoundRecord {
            presented: fb.triple,
            reported: stated,
            confidence: 100.0 * belief.mass(stated),
            fallback: fb.fallback,
            reply: source.condition().needs_llm().then_some(fb.reply),
        });
    }
    Ok(traj)
}

/// One trajectory under a self-contained condition, fully determined by `seed`.
pub fn run_trajectory(
    tables: &Arc<FeedbackTables>,
    condition: FeedbackCondition,
    rounds: usize,
    reporting: Reporting,
    seed: u64,
) -> Result<AgentTrajectory> {
    let mut rng = seeded(seed);
    let mut agent = SamplerAgent::new(condition, Arc::clone(tables), &mut rng)?;
    run_with_source(tables.space(), &mut agent, rounds, reporting, seed, &mut rng)
}

/// Whether the final stated hypothesis is extensionally the true rule.
/// `None` when there is no final hypothesis.
pub fn discovery(t: &AgentTrajectory, space: &HypothesisSpace, true_rule: &Rule) -> Option<bool> {
    t.final_round()
        .map(|r| space.same_extension(r.reported, true_rule))
}

/// Final-round confidence minus first-round confidence.
pub fn delta_from(first: Option<f64>, last: Option<f64>) -> Option<f64> {
    Some(last? - first?)
}

/// `None` unless the trajectory has both a first and a final confidence.
pub fn delta_belief(t: &AgentTrajectory, rounds: usize) -> Option<f64> {
    if t.rounds.len() < rounds || rounds < 2 {
        return None;
    }
    delta_from(t.rounds.first().map(|r| r.confidence), t.rounds.get(rounds - 1).map(|r| r.confidence))
}
