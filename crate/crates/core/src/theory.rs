//! Checks of the dynamics an ideal learner shows under different samplers.
//!
//! Hypothesis-conditioned data leave the population's expected posterior
//! unchanged, truth-sampled data drive it to the true rule, and data drawn
//! from a fixed stated hypothesis concentrate it on that hypothesis instead.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{run_from, Reporting};
use crate::belief::BeliefState;
use crate::error::{LabError, Result};
use crate::feedback::{theory_truth_sample, Feedback, FeedbackCondition, FeedbackSource, Stated};
use crate::rule_space::{Domain, Extension, HypothesisSpace, Rule, RuleTag, SpaceConfig, Triple};
use crate::seeding::{agent_index, seeded, stream, LabRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub d0: Triple,
    /// `p(h | d0)`, aligned with the catalog.
    pub input_posterior: Vec<f64>,
    /// `E[p(h | d0, d1)]` with `h* ~ p(h | d0)` and `d1 ~ p(d | h*)`.
    pub expected_posterior: Vec<f64>,
    pub max_abs_deviation: f64,
}

/// Expected next-round posterior under hypothesis-conditioned sampling, by
/// full enumeration of `h*` and of `d1` over the support of `h*`.
pub fn exact_expected_posterior(space: &Arc<HypothesisSpace>, d0: Triple) -> Result<InvarianceReport> {
    let input = BeliefState::init(Arc::clone(space), d0)?.masses();
    let n = space.len();
    let size = space.domain().size();
    // p(h | d0, d) for each domain index, filled on first use.
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; size];
    let mut expected = vec![0.0; n];
    for h_star in 0..n {
        if input[h_star] == 0.0 {
            continue;
        }
        for idx in space.support(h_star) {
            let post = cache[idx].get_or_insert_with(|| {
                let mut w: Vec<f64> = (0..n).map(|h| input[h] * space.likelihood_at(h, idx)).collect();
                let z: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= z);
                w
            });
            let weight = input[h_star] * space.likelihood_at(h_star, idx);
            for (e, p) in expected.iter_mut().zip(post.iter()) {
                *e += weight * p;
            }
        }
    }
    let max_abs_deviation = input.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(InvarianceReport { d0, input_posterior: input, expected_posterior: expected, max_abs_deviation })
}

/// Which hypothesis generates data under hypothesis-conditioned sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum HStar {
    /// Whatever the agent stated last round (a fresh posterior draw under sampled reporting).
    Stated,
    /// One catalog hypothesis for every round.
    Fixed(usize),
}

/// Draws `d ~ p(d | h*)`.
#[derive(Clone, Debug)]
pub struct HypothesisSource {
    space: Arc<HypothesisSpace>,
    h_star: HStar,
}

impl HypothesisSource {
    pub fn new(space: Arc<HypothesisSpace>, h_star: HStar) -> Result<Self> {
        if let HStar::Fixed(h) = h_star {
            if h >= space.len() {
                return Err(LabError::InvalidArgument(format!("no hypothesis {h} in a catalog of {}", space.len())));
            }
        }
        Ok(HypothesisSource { space, h_star })
    }
}

impl FeedbackSource for HypothesisSource {
    fn condition(&self) -> FeedbackCondition {
        FeedbackCondition::TheoryHypothesis
    }

    fn next(&mut self, stated: &Stated, rng: &mut LabRng) -> Result<Feedback> {
        let h = match self.h_star {
            HStar::Fixed(h) => h,
            HStar::Stated => stated
                .rule
                .ok_or_else(|| LabError::InvalidArgument("stated hypothesis is not in the catalog".into()))?,
        };
        let triple = self.space.sample_datum(h, rng);
        Ok(Feedback { triple, fallback: false, reply: triple.to_string() })
    }
}

/// Draws uniformly from the true rule's extension.
#[derive(Clone, Debug)]
pub struct TruthSource {
    truth: Extension,
}

impl TruthSource {
    pub fn new(rule: &Rule, space: &HypothesisSpace) -> Result<Self> {
        let truth = Extension::of(rule, space.domain());
        if truth.is_empty() {
            return Err(LabError::InvalidRule(format!("{} has an empty extension", rule.name())));
        }
        Ok(TruthSource { truth })
    }
}

impl FeedbackSource for TruthSource {
    fn condition(&self) -> FeedbackCondition {
        FeedbackCondition::TheoryTruth
    }

    fn next(&mut self, _stated: &Stated, rng: &mut LabRng) -> Result<Feedback> {
        let triple = theory_truth_sample(&self.truth, rng);
        Ok(Feedback { triple, fallback: false, reply: triple.to_string() })
    }
}

/// `0.5 * Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn empirical(counts: &[usize], n: usize) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// TV between the final stated hypotheses of `n_agents` hypothesis-sampled
/// trajectories (sampled reporting, `h*` re-drawn each round) and `p(h | d0)`.
pub fn monte_carlo_invariance(
    space: &Arc<HypothesisSpace>,
    d0: Triple,
    n_rounds: usize,
    n_agents: usize,
    seed: u64,
) -> Result<f64> {
    if n_agents == 0 {
        return Err(LabError::InvalidArgument("need at least one agent".into()));
    }
    let exact = BeliefState::init(Arc::clone(space), d0)?.masses();
    let finals: Vec<usize> = (0..n_agents)
        .into_par_iter()
        .map(|i| {
            let agent_seed = seed ^ agent_index(0, i);
            let mut rng = seeded(agent_seed);
            let mut source = HypothesisSource::new(Arc::clone(space), HStar::Stated)?;
            let t = run_from(space, &mut source, d0, n_rounds, Reporting::Sampled, agent_seed, &mut rng)?;
            match (&t.aborted, t.final_round()) {
                (None, Some(r)) => Ok(r.reported),
                (Some(e), _) => Err(LabError::InvalidArgument(e.clone())),
                _ => Err(LabError::InsufficientData("empty trajectory".into())),
            }
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; space.len()];
    finals.iter().for_each(|&h| counts[h] += 1);
    Ok(total_variation(&empirical(&counts, n_agents), &exact))
}

fn categorical(p: &[f64], rng: &mut LabRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// The `quantile` of TV between `n` direct draws from `p` and `p` itself,
/// over `reps` replications.
pub fn calibrate_tv_tolerance(p: &[f64], n: usize, reps: usize, quantile: f64, seed: u64) -> f64 {
    let mut tvs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, r as u64);
            let mut counts = vec![0usize; p.len()];
            (0..n).for_each(|_| counts[categorical(p, &mut rng)] += 1);
            total_variation(&empirical(&counts, n), p)
        })
        .collect();
    tvs.sort_by(|a, b| a.total_cmp(b));
    let pos = ((reps as f64 * quantile).ceil() as usize).clamp(1, reps) - 1;
    tvs[pos]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossEntropyEntry {
    pub rule: String,
    /// Nats; `+∞` (serialized as `null`) when the truth is not covered.
    pub nats: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossEntropyTable {
    pub true_rule: Rule,
    pub entries: Vec<CrossEntropyEntry>,
}

impl CrossEntropyTable {
    pub fn value(&self, h: usize) -> f64 {
        self.entries[h].nats
    }

    /// Catalog index of the smallest finite entry.
    pub fn argmin(&self) -> Option<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.nats.is_finite())
            .min_by(|a, b| a.1.nats.total_cmp(&b.1.nats))
            .map(|(h, _)| h)
    }
}

/// `-E[log p(d | h)]` for `d` uniform over the true rule's extension.
pub fn cross_entropy_table(space: &HypothesisSpace, true_rule: &Rule) -> Result<CrossEntropyTable> {
    let truth = Extension::of(true_rule, space.domain());
    if truth.is_empty() {
        return Err(LabError::InvalidRule(format!("{} has an empty extension", true_rule.name())));
    }
    let n = truth.len() as f64;
    let entries = (0..space.len())
        .map(|h| {
            let sum: f64 = truth.indices().iter().map(|&i| space.likelihood_at(h, i as usize).ln()).sum();
            CrossEntropyEntry { rule: space.rule(h).name().to_string(), nats: -sum / n }
        })
        .collect();
    Ok(CrossEntropyTable { true_rule: true_rule.clone(), entries })
}

/// `(1/n) Σ log p(d_i | h)` with `d_i` uniform over the true rule's extension.
pub fn log_likelihood_rate(space: &HypothesisSpace, true_rule: &Rule, h: usize, n: usize, rng: &mut LabRng) -> Result<f64> {
    if n == 0 {
        return Err(LabError::InvalidArgument("need at least one sample".into()));
    }
    let truth = Extension::of(true_rule, space.domain());
    if truth.is_empty() {
        return Err(LabError::InvalidRule(format!("{} has an empty extension", true_rule.name())));
    }
    let sum: f64 = (0..n).map(|_| space.log_likelihood(h, &theory_truth_sample(&truth, rng))).sum();
    Ok(sum / n as f64)
}

/// Where a population's data come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    Truth { rule: Rule },
    Hypothesis { h_star: HStar },
}

impl DataSource {
    fn build(&self, space: &Arc<HypothesisSpace>) -> Result<Box<dyn FeedbackSource + Send>> {
        Ok(match self {
            DataSource::Truth { rule } => Box::new(TruthSource::new(rule, space)?),
            DataSource::Hypothesis { h_star } => Box::new(HypothesisSource::new(Arc::clone(space), *h_star)?),
        })
    }
}

/// Mean posterior over a population, round by round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationRun {
    pub n_agents: usize,
    /// `mean[r][h]`: mean mass of `h` after round `r`; round 0 is after 2-4-6 alone.
    pub mean: Vec<Vec<f64>>,
    pub sd: Vec<Vec<f64>>,
    /// Each agent's posterior after the last round.
    pub final_masses: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub round: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PopulationRun {
    /// Per-round mean mass of `target` with a normal 95% interval.
    pub fn curve(&self, target: usize) -> Vec<CurvePoint> {
        let se = 1.96 / (self.n_agents as f64).sqrt();
        self.mean
            .iter()
            .zip(&self.sd)
            .enumerate()
            .map(|(round, (m, s))| CurvePoint {
                round,
                mean: m[target],
                ci_low: m[target] - se * s[target],
                ci_high: m[target] + se * s[target],
            })
            .collect()
    }
}

fn agent_masses(
    space: &Arc<HypothesisSpace>,
    source: &mut dyn FeedbackSource,
    n_rounds: usize,
    reporting: Reporting,
    rng: &mut LabRng,
) -> Result<Vec<Vec<f64>>> {
    let mut belief = BeliefState::init(Arc::clone(space), Triple::SEED)?;
    let mut out = Vec::with_capacity(n_rounds + 1);
    out.push(belief.masses());
    for _ in 0..n_rounds {
        let stated = match reporting {
            Reporting::Sampled => belief.sample_hypothesis(rng),
            Reporting::Modal => belief.map_hypothesis(),
        };
        let fb = source.next(&Stated::rule(space, stated), rng)?;
        belief = belief.update(fb.triple)?;
        out.push(belief.masses());
    }
    Ok(out)
}

/// Run `n_agents` learners for `n_rounds` feedback rounds after 2-4-6.
pub fn population_run(
    space: &Arc<HypothesisSpace>,
    source: &DataSource,
    n_rounds: usize,
    n_agents: usize,
    reporting: Reporting,
    seed: u64,
) -> Result<PopulationRun> {
    if n_agents == 0 {
        return Err(LabError::InvalidArgument("need at least one agent".into()));
    }
    let runs: Vec<Vec<Vec<f64>>> = (0..n_agents)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, agent_index(0, i));
            let mut src = source.build(space)?;
            agent_masses(space, src.as_mut(), n_rounds, reporting, &mut rng)
        })
        .collect::<Result<_>>()?;
    let n = n_agents as f64;
    let k = space.len();
    let mut mean = vec![vec![0.0; k]; n_rounds + 1];
    let mut sd = vec![vec![0.0; k]; n_rounds + 1];
    for r in 0..=n_rounds {
        for h in 0..k {
            let m = runs.iter().map(|a| a[r][h]).sum::<f64>() / n;
            let v = if n_agents > 1 { runs.iter().map(|a| (a[r][h] - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
            mean[r][h] = m;
            sd[r][h] = v.sqrt();
        }
    }
    let final_masses = runs.into_iter().map(|mut a| a.pop().expect("round 0 is always present")).collect();
    Ok(PopulationRun { n_agents, mean, sd, final_masses })
}

/// Per-round mean posterior mass of `target`.
pub fn convergence_curve(
    space: &Arc<HypothesisSpace>,
    source: &DataSource,
    target: &Rule,
    n_rounds: usize,
    n_agents: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    let h = space.require_index(target)?;
    Ok(population_run(space, source, n_rounds, n_agents, Reporting::Sampled, seed)?.curve(h))
}

/// CSV with columns `round,mean,ci_low,ci_high`.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Largest deviation of [`exact_expected_posterior`] over every `d0` in the domain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceSweep {
    pub checked: usize,
    pub worst_d0: Triple,
    pub max_abs_deviation: f64,
}

pub fn invariance_sweep(space: &Arc<HypothesisSpace>) -> Result<InvarianceSweep> {
    let domain = space.domain();
    let worst = (0..domain.size())
        .into_par_iter()
        .map(|i| exact_expected_posterior(space, domain.triple_at(i)).map(|r| (r.max_abs_deviation, r.d0)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| LabError::InvalidDomain("empty domain".into()))?;
    Ok(InvarianceSweep { checked: domain.size(), worst_d0: worst.1, max_abs_deviation: worst.0 })
}

/// Settings for the full set of learner-dynamics checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    /// Space for the exact sweep.
    pub exact_space: SpaceConfig,
    /// Space for the simulations.
    pub space: SpaceConfig,
    pub true_rule: Rule,
    /// Stated hypothesis held fixed in the mismatched-sampler run.
    pub fixed_hypothesis: Rule,
    pub mc_rounds: usize,
    pub mc_agents: usize,
    pub tv_reps: usize,
    pub tv_quantile: f64,
    pub curve_rounds: usize,
    pub curve_agents: usize,
    pub fixed_rounds: usize,
    pub rate_samples: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            exact_space: SpaceConfig { max_value: Domain::EXACT_BOUND, ..SpaceConfig::default() },
            space: SpaceConfig::default(),
            true_rule: RuleTag::AllEven.into(),
            fixed_hypothesis: RuleTag::ArithProg2.into(),
            mc_rounds: 3,
            mc_agents: 2000,
            tv_reps: 1000,
            tv_quantile: 0.99,
            curve_rounds: 200,
            curve_agents: 100,
            fixed_rounds: 100,
            rate_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEntry {
    pub rule: String,
    pub rate: f64,
    /// `-H(truth, h)`, the rate's limit.
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryReport {
    pub sweep: InvarianceSweep,
    pub mc_tv: f64,
    pub mc_tv_tolerance: f64,
    pub cross_entropy: CrossEntropyTable,
    pub rates: Vec<RateEntry>,
    pub truth_curve: Vec<CurvePoint>,
    /// Mean mass of the fixed hypothesis under its own sampler.
    pub fixed_curve: Vec<CurvePoint>,
    /// Mean mass of the true rule under the fixed-hypothesis sampler.
    pub fixed_truth_curve: Vec<CurvePoint>,
}

pub fn run_theory(cfg: &TheoryConfig, seed: u64) -> Result<TheoryReport> {
    let exact = Arc::new(cfg.exact_space.build()?);
    let space = Arc::new(cfg.space.build()?);
    log::info!("invariance sweep over {} triples", exact.domain().size());
    let sweep = invariance_sweep(&exact)?;
    log::info!("monte carlo invariance with {} agents", cfg.mc_agents);
    let mc_tv = monte_carlo_invariance(&space, Triple::SEED, cfg.mc_rounds, cfg.mc_agents, stream(seed, 1).gen())?;
    let p0 = BeliefState::init(Arc::clone(&space), Triple::SEED)?.masses();
    let mc_tv_tolerance = calibrate_tv_tolerance(&p0, cfg.mc_agents, cfg.tv_reps, cfg.tv_quantile, stream(seed, 2).gen());
    let cross_entropy = cross_entropy_table(&space, &cfg.true_rule)?;
    let mut rng = stream(seed, 3);
    let rates = (0..space.len())
        .filter(|&h| cross_entropy.value(h).is_finite())
        .map(|h| {
            Ok(RateEntry {
                rule: space.rule(h).name().to_string(),
                rate: log_likelihood_rate(&space, &cfg.true_rule, h, cfg.rate_samples, &mut rng)?,
                expected: -cross_entropy.value(h),
            })
        })
        .collect::<Result<_>>()?;
    log::info!("population curves");
    let truth = DataSource::Truth { rule: cfg.true_rule.clone() };
    let truth_curve = convergence_curve(&space, &truth, &cfg.true_rule, cfg.curve_rounds, cfg.curve_agents, stream(seed, 4).gen())?;
    let fixed = DataSource::Hypothesis { h_star: HStar::Fixed(space.require_index(&cfg.fixed_hypothesis)?) };
    let run = population_run(&space, &fixed, cfg.fixed_rounds, cfg.curve_agents, Reporting::Sampled, stream(seed, 5).gen())?;
    Ok(TheoryReport {
        sweep,
        mc_tv,
        mc_tv_tolerance,
        cross_entropy,
        rates,
        truth_curve,
        fixed_curve: run.curve(space.require_index(&cfg.fixed_hypothesis)?),
        fixed_truth_curve: run.curve(space.require_index(&cfg.true_rule)?),
    })
}
