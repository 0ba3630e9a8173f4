//! A laboratory for studying how the sampling strategy of a feedback agent
//! shapes the beliefs of a Bayesian learner in the 2-4-6 rule discovery task.
//!
//! The pieces, bottom up:
//!
//! - [`rule_space`]: triples, rules, extensions and size-principle likelihoods.
//! - [`belief`]: sequential Bayesian updating in log space.
//! - [`feedback`]: truth-sampling, hypothesis-sampling, confirming,
//!   disconfirming, random and LLM-backed feedback.
//! - [`agent`]: a simulated participant playing R rounds.
//! - [`theory`]: exact and Monte Carlo checks of posterior invariance,
//!   convergence and cross-entropy.
//! - [`experiment`]: multi-condition population runs and their measures.
//! - [`stats`]: permutation, bootstrap, Welch, TOST and ANOVA procedures.
//! - [`llm`]: chat-completions client with retries and a scripted mock.
//! - [`session`]: the participant-facing session service and its store.

pub mod agent;
pub mod belief;
pub mod error;
pub mod experiment;
pub mod feedback;
pub mod llm;
pub mod rule_space;
pub mod seeding;
pub mod session;
pub mod stats;
pub mod theory;

pub use error::{LabError, Result};
pub use rule_space::{Domain, HypothesisSpace, Rule, RuleTag, Triple};
pub use seeding::LabRng;
