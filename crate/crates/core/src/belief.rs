//! Sequential Bayesian updating over a [`HypothesisSpace`].

use std::sync::Arc;

use rand::Rng;

use crate::error::{LabError, Result};
use crate::rule_space::{HypothesisSpace, Rule, Triple};
use crate::seeding::LabRng;

/// Posterior over a hypothesis catalog, held as normalized log-probabilities.
///
/// Values are immutable; [`BeliefState::update`] returns a new state.
#[derive(Clone, Debug)]
pub struct BeliefState {
    space: Arc<HypothesisSpace>,
    log_weights: Vec<f64>,
    history: Vec<Triple>,
}

/// Shift by the max, exponentiate, renormalize. `None` if every weight is -inf.
fn normalize(log_weights: &mut [f64]) -> Option<()> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let log_z = max + log_weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    for w in log_weights.iter_mut() {
        *w -= log_z;
    }
    Some(())
}

impl BeliefState {
    /// The prior, before any data.
    pub fn from_prior(space: Arc<HypothesisSpace>) -> Self {
        let log_weights = space.prior().iter().map(|p| p.ln()).collect();
        BeliefState { space, log_weights, history: Vec::new() }
    }

    /// `p(h | d0) ∝ p(h) p(d0 | h)`.
    pub fn init(space: Arc<HypothesisSpace>, d0: Triple) -> Result<Self> {
        Self::from_prior(space).update(d0)
    }

    /// `p(h | ..., d) ∝ p(d | h) p(h | ...)`.
    pub fn update(&self, d: Triple) -> Result<Self> {
        self.space.domain().check(&d)?;
        let mut log_weights: Vec<f64> = self
            .log_weights
            .iter()
            .enumerate()
            .map(|(h, w)| w + self.space.log_likelihood(h, &d))
            .collect();
        normalize(&mut log_weights).ok_or(LabError::Contradiction)?;
        let mut history = self.history.clone();
        history.push(d);
        Ok(BeliefState { space: Arc::clone(&self.space), log_weights, history })
    }

    pub fn space(&self) -> &Arc<HypothesisSpace> {
        &self.space
    }

    pub fn history(&self) -> &[Triple] {
        &self.history
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn mass(&self, h: usize) -> f64 {
        self.log_weights[h].exp()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn posterior_mass(&self, rule: &Rule) -> Result<f64> {
        Ok(self.mass(self.space.require_index(rule)?))
    }

    /// Catalog index drawn with probability equal to its posterior mass.
    pub fn sample_hypothesis(&self, rng: &mut LabRng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_live = 0;
        for (h, w) in self.log_weights.iter().enumerate() {
            if *w == f64::NEG_INFINITY {
                continue;
            }
            last_live = h;
            acc += w.exp();
            if u < acc {
                return h;
            }
        }
        last_live
    }

    /// Catalog index of maximal mass, lowest index on ties.
    pub fn map_hypothesis(&self) -> usize {
        let mut best = 0;
        for (h, w) in self.log_weights.iter().enumerate() {
            if *w > self.log_weights[best] {
                best = h;
            }
        }
        best
    }
}
