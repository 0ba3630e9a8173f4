//! Multi-condition population runs and the measures compared across them.
//!
//! Simulated trajectories are stored as [`SessionRecord`]s, so simulated and
//! human sessions go through the same measures and comparisons.

pub mod coding;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{run_trajectory, run_with_source, Reporting};
use crate::error::{LabError, Result};
use crate::feedback::{FeedbackCondition, FeedbackTables, LlmFeedback};
use crate::llm::{LlmClient, ModelConfig};
use crate::rule_space::{HypothesisSpace, Rule, RuleTag, SpaceConfig};
use crate::seeding::{agent_index, seeded, stream, LabRng};
use crate::session::{write_jsonl, SessionRecord};
use crate::stats::{
    anova_oneway, cohens_d, mean, perm_chi2_independence, perm_two_proportion, std_dev, tost_equivalence, welch_t,
    ContingencyTable, ProportionTest, Sided, TestResult,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub condition: FeedbackCondition,
    pub agents: usize,
}

/// One pairwise comparison, `a` minus `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub a: FeedbackCondition,
    pub b: FeedbackCondition,
    #[serde(default)]
    pub sided: Sided,
    /// Also run an equivalence test on ΔBelief with bounds ±0.5·SD of `b`.
    #[serde(default)]
    pub tost: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub conditions: Vec<ConditionSpec>,
    pub rounds: usize,
    pub space: SpaceConfig,
    pub true_rule: Rule,
    pub seed: u64,
    pub reporting: Reporting,
    pub llm: Option<ModelConfig>,
    /// Pairwise comparisons; empty means every pair, two-sided.
    pub comparisons: Vec<ComparisonSpec>,
    pub permutation_reps: usize,
    pub bootstrap_reps: usize,
    pub ci_level: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spec = |condition| ConditionSpec { condition, agents: 500 };
        ExperimentConfig {
            conditions: vec![
                spec(FeedbackCondition::RuleConfirming),
                spec(FeedbackCondition::RuleDisconfirming),
                spec(FeedbackCondition::RandomSequence),
                spec(FeedbackCondition::TheoryTruth),
            ],
            rounds: 3,
            space: SpaceConfig::default(),
            true_rule: RuleTag::AllEven.into(),
            seed: 0,
            reporting: Reporting::Sampled,
            llm: None,
            comparisons: Vec::new(),
            permutation_reps: 5000,
            bootstrap_reps: 5000,
            ci_level: 0.95,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 2 {
            return Err(LabError::Config("rounds must be at least 2".into()));
        }
        if self.conditions.is_empty() {
            return Err(LabError::Config("no conditions configured".into()));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if c.agents == 0 {
                return Err(LabError::Config(format!("{} has no agents", c.condition)));
            }
            if self.conditions[..i].iter().any(|o| o.condition == c.condition) {
                return Err(LabError::Config(format!("{} listed twice", c.condition)));
            }
        }
        Ok(())
    }

    /// Configured comparisons, or every pair in listed order.
    pub fn pairs(&self) -> Vec<ComparisonSpec> {
        if !self.comparisons.is_empty() {
            return self.comparisons.clone();
        }
        let mut out = Vec::new();
        for (i, a) in self.conditions.iter().enumerate() {
            for b in &self.conditions[i + 1..] {
                out.push(ComparisonSpec { a: a.condition, b: b.condition, sided: Sided::Two, tost: false });
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: FeedbackCondition,
    pub records: Vec<SessionRecord>,
    pub discoveries: usize,
    /// Discoveries over non-missing finals; `None` when all are missing.
    pub discovery_rate: Option<f64>,
    pub delta_beliefs: Vec<f64>,
    pub missing_discovery: usize,
    pub missing_delta: usize,
}

impl ConditionResult {
    pub fn from_records(condition: FeedbackCondition, records: Vec<SessionRecord>, space: &HypothesisSpace, true_rule: &Rule) -> Self {
        let coded: Vec<Option<bool>> = records.iter().map(|r| r.discovery(space, true_rule)).collect();
        let discoveries = coded.iter().filter(|c| **c == Some(true)).count();
        let finals = coded.iter().filter(|c| c.is_some()).count();
        let delta_beliefs: Vec<f64> = records.iter().filter_map(SessionRecord::delta_belief).collect();
        ConditionResult {
            condition,
            discoveries,
            discovery_rate: (finals > 0).then(|| discoveries as f64 / finals as f64),
            missing_discovery: records.len() - finals,
            missing_delta: records.len() - delta_beliefs.len(),
            delta_beliefs,
            records,
        }
    }

    /// Units with a coded final hypothesis.
    pub fn coded(&self) -> usize {
        self.records.len() - self.missing_discovery
    }

    pub fn mean_delta(&self) -> Option<f64> {
        (!self.delta_beliefs.is_empty()).then(|| mean(&self.delta_beliefs))
    }
}

/// Group records by condition, in canonical condition order.
pub fn results_from_records(records: Vec<SessionRecord>, space: &HypothesisSpace, true_rule: &Rule) -> Vec<ConditionResult> {
    FeedbackCondition::ALL
        .into_iter()
        .filter_map(|c| {
            let mine: Vec<SessionRecord> = records.iter().filter(|r| r.condition == c).cloned().collect();
            (!mine.is_empty()).then(|| ConditionResult::from_records(c, mine, space, true_rule))
        })
        .collect()
}

fn slot(condition: FeedbackCondition) -> usize {
    FeedbackCondition::ALL.iter().position(|c| *c == condition).expect("every condition is listed")
}

/// Run every configured condition. LLM conditions need `client`.
///
/// Agent `i` of a condition is seeded from the root seed, the condition and
/// `i` alone, so adding conditions or agents never changes existing ones.
pub fn run_experiment(cfg: &ExperimentConfig, client: Option<Arc<LlmClient>>) -> Result<Vec<ConditionResult>> {
    cfg.validate()?;
    if client.is_none() {
        if let Some(c) = cfg.conditions.iter().find(|c| c.condition.needs_llm()) {
            return Err(LabError::Config(format!("{} needs an llm client", c.condition)));
        }
    }
    let space = Arc::new(cfg.space.build()?);
    let tables = Arc::new(FeedbackTables::new(Arc::clone(&space), cfg.true_rule.clone())?);
    cfg.conditions
        .iter()
        .map(|spec| {
            let records = (0..spec.agents)
                .into_par_iter()
                .map(|i| {
                    let seed = cfg.seed ^ agent_index(slot(spec.condition), i);
                    let t = match &client {
                        Some(c) if spec.condition.needs_llm() => {
                            let mut src = LlmFeedback::new(
                                spec.condition,
                                Arc::clone(c),
                                cfg.true_rule.clone(),
                                cfg.rounds,
                                space.domain(),
                            )?;
                            run_with_source(&space, &mut src, cfg.rounds, cfg.reporting, seed, &mut seeded(seed))?
                        }
                        _ => run_trajectory(&tables, spec.condition, cfg.rounds, cfg.reporting, seed)?,
                    };
                    if let Some(e) = &t.aborted {
                        log::warn!("{} agent {i} stopped early: {e}", spec.condition);
                    }
                    let id = format!("sim-{}-{i:06}", spec.condition.name().to_lowercase());
                    let mut rec = SessionRecord::from_trajectory(&t, id, &space, cfg.rounds);
                    if spec.condition.needs_llm() {
                        if let Some(c) = &client {
                            rec.provenance.model_config_hash = Some(c.config().config_hash());
                            rec.provenance.temperature = c.config().temperature;
                        }
                    }
                    Ok(rec)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConditionResult::from_records(spec.condition, records, &space, &cfg.true_rule))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub a: FeedbackCondition,
    pub b: FeedbackCondition,
    /// Discovery-rate difference `a - b`.
    pub discovery: TestResult,
    /// Welch t on ΔBelief.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cohens_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tost: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tost_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Discovery × condition permutation test of independence.
    pub omnibus: Option<TestResult>,
    /// One-way ANOVA on ΔBelief.
    pub anova: Option<TestResult>,
    pub pairs: Vec<PairReport>,
    /// Tests skipped and why.
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub permutation_reps: usize,
    pub bootstrap_reps: usize,
    pub ci_level: f64,
}

impl From<&ExperimentConfig> for CompareOptions {
    fn from(cfg: &ExperimentConfig) -> Self {
        CompareOptions { permutation_reps: cfg.permutation_reps, bootstrap_reps: cfg.bootstrap_reps, ci_level: cfg.ci_level }
    }
}

fn find(results: &[ConditionResult], c: FeedbackCondition) -> Result<&ConditionResult> {
    let r = results
        .iter()
        .find(|r| r.condition == c)
        .ok_or_else(|| LabError::InvalidArgument(format!("{c} is not among the results")))?;
    if r.coded() == 0 {
        return Err(LabError::InsufficientData(format!("{c} has no coded sessions")));
    }
    Ok(r)
}

/// Omnibus tests plus the requested pairwise comparisons.
pub fn compare_conditions(
    results: &[ConditionResult],
    pairs: &[ComparisonSpec],
    opts: CompareOptions,
    rng: &mut LabRng,
) -> Result<ComparisonReport> {
    let mut notes = Vec::new();
    let usable: Vec<&ConditionResult> = results.iter().filter(|r| r.coded() > 0).collect();
    let omnibus = if usable.len() >= 2 {
        let tbl = ContingencyTable::new(
            usable.iter().map(|r| r.condition.name().to_string()).collect(),
            usable.iter().map(|r| [r.discoveries as u64, (r.coded() - r.discoveries) as u64]).collect(),
        )?;
        match perm_chi2_independence(&tbl, opts.permutation_reps, rng) {
            Ok(t) => Some(t),
            Err(e @ LabError::DegenerateTable(_)) => {
                notes.push(format!("omnibus: {e}"));
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let groups: Vec<Vec<f64>> = results.iter().filter(|r| r.delta_beliefs.len() >= 2).map(|r| r.delta_beliefs.clone()).collect();
    let anova = if groups.len() >= 2 {
        anova_oneway(&groups).map_err(|e| notes.push(format!("anova: {e}"))).ok()
    } else {
        None
    };
    let mut reports = Vec::with_capacity(pairs.len());
    for spec in pairs {
        let (a, b) = (find(results, spec.a)?, find(results, spec.b)?);
        let discovery = perm_two_proportion(
            a.discoveries as u64,
            a.coded() as u64,
            b.discoveries as u64,
            b.coded() as u64,
            ProportionTest {
                reps: opts.permutation_reps,
                sided: spec.sided,
                ci_level: opts.ci_level,
                bootstrap_reps: opts.bootstrap_reps,
            },
            rng,
        )?;
        let label = format!("{} vs {}", spec.a, spec.b);
        let delta = welch_t(&a.delta_beliefs, &b.delta_beliefs).map_err(|e| notes.push(format!("{label} welch: {e}"))).ok();
        let d = cohens_d(&a.delta_beliefs, &b.delta_beliefs).map_err(|e| notes.push(format!("{label} cohen's d: {e}"))).ok();
        let (tost, tost_bound) = if spec.tost && b.delta_beliefs.len() >= 2 {
            let bound = 0.5 * std_dev(&b.delta_beliefs);
            let t = tost_equivalence(&a.delta_beliefs, &b.delta_beliefs, bound)
                .map_err(|e| notes.push(format!("{label} tost: {e}")))
                .ok();
            (t, Some(bound))
        } else {
            (None, None)
        };
        reports.push(PairReport { a: spec.a, b: spec.b, discovery, delta, cohens_d: d, tost, tost_bound });
    }
    Ok(ComparisonReport { omnibus, anova, pairs: reports, notes })
}

/// Stream for the comparison procedures; agent indices never reach it.
const ANALYSIS_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: FeedbackCondition,
    pub n: usize,
    pub discoveries: usize,
    pub discovery_rate: Option<f64>,
    pub mean_delta: Option<f64>,
    pub sd_delta: Option<f64>,
    pub missing_discovery: usize,
    pub missing_delta: usize,
}

impl ConditionSummary {
    pub fn of(r: &ConditionResult) -> Self {
        ConditionSummary {
            condition: r.condition,
            n: r.records.len(),
            discoveries: r.discoveries,
            discovery_rate: r.discovery_rate,
            mean_delta: r.mean_delta(),
            sd_delta: (r.delta_beliefs.len() >= 2).then(|| std_dev(&r.delta_beliefs)),
            missing_discovery: r.missing_discovery,
            missing_delta: r.missing_delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub seed: u64,
    pub conditions: Vec<ConditionSummary>,
    pub comparison: ComparisonReport,
}

/// Per-condition summaries and comparisons. With no configured comparisons,
/// every pair of conditions that has coded sessions is compared.
pub fn analyze(results: &[ConditionResult], cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let pairs = if cfg.comparisons.is_empty() {
        let present: Vec<ConditionSpec> = results
            .iter()
            .filter(|r| r.coded() > 0)
            .map(|r| ConditionSpec { condition: r.condition, agents: r.records.len() })
            .collect();
        ExperimentConfig { conditions: present, ..ExperimentConfig::default() }.pairs()
    } else {
        cfg.comparisons.clone()
    };
    let mut rng = stream(cfg.seed, ANALYSIS_STREAM);
    Ok(AnalysisReport {
        seed: cfg.seed,
        conditions: results.iter().map(ConditionSummary::of).collect(),
        comparison: compare_conditions(results, &pairs, CompareOptions::from(cfg), &mut rng)?,
    })
}

/// One session record per line, conditions in result order.
pub fn write_results_jsonl<W: Write>(results: &[ConditionResult], out: W) -> Result<()> {
    let all: Vec<SessionRecord> = results.iter().flat_map(|r| r.records.iter().cloned()).collect();
    write_jsonl(&all, out)
}

#[derive(Serialize)]
struct SummaryRow {
    condition: FeedbackCondition,
    n: usize,
    discovery_rate: Option<f64>,
    mean_delta: Option<f64>,
    sd_delta: Option<f64>,
}

/// CSV with columns `condition,n,discovery_rate,mean_delta,sd_delta`.
pub fn write_summary_csv<W: Write>(results: &[ConditionResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        let c = ConditionSummary::of(r);
        w.serialize(SummaryRow {
            condition: c.condition,
            n: c.n,
            discovery_rate: c.discovery_rate,
            mean_delta: c.mean_delta,
            sd_delta: c.sd_delta,
        })?;
    }
    w.flush()?;
    Ok(())
}
