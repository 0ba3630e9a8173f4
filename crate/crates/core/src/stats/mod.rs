//! Hypothesis tests used to compare conditions: permutation tests with
//! percentile-bootstrap intervals, Welch's t, Cohen's d, TOST equivalence and
//! one-way ANOVA.
//!
//! Permutation p-values use the add-one estimator `(1 + k) / (1 + reps)`, so
//! they never reach zero. Resampling loops are split into fixed-size chunks,
//! each with its own stream derived from one draw of the caller's rng, which
//! keeps results identical however rayon schedules the chunks.

pub mod special;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::seeding::{stream, LabRng};
use special::{f_upper, ln_gamma, t_quantile, t_two_sided, t_upper};

pub const MIN_PERMUTATIONS: usize = 1000;
const CHUNK: usize = 256;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// Denominator degrees of freedom, for F tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
}

/// Success/failure counts per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub rows: Vec<String>,
    /// `[successes, failures]` per row.
    pub counts: Vec<[u64; 2]>,
}

impl ContingencyTable {
    pub fn new(rows: Vec<String>, counts: Vec<[u64; 2]>) -> Result<Self> {
        if rows.len() != counts.len() || rows.len() < 2 {
            return Err(LabError::InvalidArgument("need at least two labelled rows".into()));
        }
        if counts.iter().any(|c| c[0] + c[1] == 0) {
            return Err(LabError::InvalidArgument("every row needs at least one unit".into()));
        }
        Ok(ContingencyTable { rows, counts })
    }

    pub fn from_counts(counts: &[[u64; 2]]) -> Result<Self> {
        Self::new((0..counts.len()).map(|i| format!("row{i}")).collect(), counts.to_vec())
    }

    fn totals(&self) -> (Vec<u64>, u64, u64) {
        let row: Vec<u64> = self.counts.iter().map(|c| c[0] + c[1]).collect();
        let succ = self.counts.iter().map(|c| c[0]).sum();
        (row, succ, self.counts.iter().map(|c| c[1]).sum())
    }
}

/// Pearson χ² for success counts `succ[i]` out of `rows[i]`.
fn chi2_of(succ: &[u64], rows: &[u64], total_succ: u64, total: u64) -> f64 {
    let p = total_succ as f64 / total as f64;
    let mut chi2 = 0.0;
    for (&s, &n) in succ.iter().zip(rows) {
        let n = n as f64;
        let (es, ef) = (n * p, n * (1.0 - p));
        let (os, of) = (s as f64, n - s as f64);
        chi2 += (os - es).powi(2) / es + (of - ef).powi(2) / ef;
    }
    chi2
}

pub fn pearson_chi2(tbl: &ContingencyTable) -> Result<f64> {
    let (rows, succ, fail) = tbl.totals();
    if succ == 0 || fail == 0 {
        return Err(LabError::DegenerateTable("a column is all zero".into()));
    }
    let s: Vec<u64> = tbl.counts.iter().map(|c| c[0]).collect();
    Ok(chi2_of(&s, &rows, succ, succ + fail))
}

fn at_least(x: f64, observed: f64) -> bool {
    x >= observed - 1e-9 * observed.abs().max(1.0)
}

/// Count, over `reps` draws of `draw`, how often `hit` holds. Chunked and seeded.
fn count_hits<F>(reps: usize, base: u64, draw: F) -> usize
where
    F: Fn(&mut LabRng) -> bool + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(base, k as u64);
            let n = CHUNK.min(reps - k * CHUNK);
            (0..n).filter(|_| draw(&mut rng)).count()
        })
        .sum()
}

fn collect_draws<F>(reps: usize, base: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut LabRng) -> f64 + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream(base, k as u64);
            let n = CHUNK.min(reps - k * CHUNK);
            (0..n).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// Add-one permutation p-value.
pub fn add_one_p(exceed: usize, reps: usize) -> f64 {
    (1 + exceed) as f64 / (1 + reps) as f64
}

/// Permutation test of independence between row and outcome.
///
/// Outcome labels are shuffled across all pooled units and the Pearson χ² is
/// recomputed for each shuffle.
pub fn perm_chi2_independence(tbl: &ContingencyTable, reps: usize, rng: &mut LabRng) -> Result<TestResult> {
    if reps < MIN_PERMUTATIONS {
        return Err(LabError::InvalidArgument(format!("need at least {MIN_PERMUTATIONS} permutations")));
    }
    let observed = pearson_chi2(tbl)?;
    let (rows, succ, fail) = tbl.totals();
    let total = succ + fail;
    let mut pooled = vec![false; total as usize];
    pooled[..succ as usize].iter_mut().for_each(|x| *x = true);
    let base: u64 = rng.gen();
    let exceed = count_hits(reps, base, |r| {
        let mut units = pooled.clone();
        units.shuffle(r);
        let mut at = 0usize;
        let s: Vec<u64> = rows
            .iter()
            .map(|&n| {
                let c = units[at..at + n as usize].iter().filter(|&&x| x).count() as u64;
                at += n as usize;
                c
            })
            .collect();
        at_least(chi2_of(&s, &rows, succ, total), observed)
    });
    Ok(TestResult {
        statistic: observed,
        p_value: add_one_p(exceed, reps),
        df: Some((tbl.counts.len() - 1) as f64),
        ..Default::default()
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    #[default]
    Two,
    /// Alternative: first proportion larger.
    Greater,
    /// Alternative: first proportion smaller.
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionTest {
    pub reps: usize,
    pub sided: Sided,
    pub ci_level: f64,
    pub bootstrap_reps: usize,
}

impl Default for ProportionTest {
    fn default() -> Self {
        ProportionTest { reps: 5000, sided: Sided::Two, ci_level: 0.95, bootstrap_reps: 5000 }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval from bootstrap draws.
pub fn percentile_ci(mut draws: Vec<f64>, level: f64) -> (f64, f64) {
    draws.sort_by(|a, b| a.total_cmp(b));
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&draws, tail), quantile_sorted(&draws, 1.0 - tail))
}

/// Inverse-CDF sampler over the integers `lo..lo + cdf.len()`.
struct Discrete {
    lo: usize,
    cdf: Vec<f64>,
}

impl Discrete {
    fn from_log_weights(lo: usize, logw: &[f64]) -> Self {
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = logw
            .iter()
            .map(|w| {
                acc += (w - top).exp();
                acc
            })
            .collect();
        cdf.iter_mut().for_each(|c| *c /= acc);
        Discrete { lo, cdf }
    }

    fn point(x: usize) -> Self {
        Discrete { lo: x, cdf: vec![1.0] }
    }

    fn draw(&self, rng: &mut LabRng) -> usize {
        let u: f64 = rng.gen();
        self.lo + self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Successes among `take` units drawn without replacement from `n` units,
/// `s` of them successes.
fn hypergeometric(n: usize, s: usize, take: usize) -> Discrete {
    let lo = (take + s).saturating_sub(n);
    let hi = s.min(take);
    let logw: Vec<f64> = (lo..=hi).map(|x| ln_choose(s, x) + ln_choose(n - s, take - x)).collect();
    Discrete::from_log_weights(lo, &logw)
}

/// Successes among `n` draws with replacement from a group with `s` of `n` successes.
fn binomial_resample(s: usize, n: usize) -> Discrete {
    if s == 0 || s == n {
        return Discrete::point(s);
    }
    let p = s as f64 / n as f64;
    let logw: Vec<f64> = (0..=n).map(|k| ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()).collect();
    Discrete::from_log_weights(0, &logw)
}

/// Permutation p-value only, with no bootstrap interval.
pub fn perm_two_proportion_p(sa: u64, na: u64, sb: u64, nb: u64, reps: usize, sided: Sided, rng: &mut LabRng) -> Result<f64> {
    if na == 0 || nb == 0 || sa > na || sb > nb {
        return Err(LabError::InvalidArgument("counts must satisfy 0 <= s <= n, n > 0".into()));
    }
    if reps < MIN_PERMUTATIONS {
        return Err(LabError::InvalidArgument(format!("need at least {MIN_PERMUTATIONS} permutations")));
    }
    let observed = sa as f64 / na as f64 - sb as f64 / nb as f64;
    let (n, s) = ((na + nb) as usize, (sa + sb) as usize);
    let base: u64 = rng.gen();
    let null = hypergeometric(n, s, na as usize);
    let exceed = count_hits(reps, base, |r| {
        let xa = null.draw(r);
        let d = xa as f64 / na as f64 - (s - xa) as f64 / nb as f64;
        match sided {
            Sided::Two => at_least(d.abs(), observed.abs()),
            Sided::Greater => at_least(d, observed),
            Sided::Less => at_least(-d, -observed),
        }
    });
    Ok(add_one_p(exceed, reps))
}

/// Difference of two proportions: permutation p-value and percentile
/// bootstrap interval (each group resampled with replacement).
pub fn perm_two_proportion(
    sa: u64,
    na: u64,
    sb: u64,
    nb: u64,
    opts: ProportionTest,
    rng: &mut LabRng,
) -> Result<TestResult> {
    let p_value = perm_two_proportion_p(sa, na, sb, nb, opts.reps, opts.sided, rng)?;
    let observed = sa as f64 / na as f64 - sb as f64 / nb as f64;
    let base: u64 = rng.gen();
    let (ga, gb) = (binomial_resample(sa as usize, na as usize), binomial_resample(sb as usize, nb as usize));
    let draws = collect_draws(opts.bootstrap_reps.max(1), base, |r| {
        ga.draw(r) as f64 / na as f64 - gb.draw(r) as f64 / nb as f64
    });
    let (lo, hi) = percentile_ci(draws, opts.ci_level);
    Ok(TestResult { statistic: observed, p_value, ci_low: Some(lo), ci_high: Some(hi), ..Default::default() })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

struct Welch {
    diff: f64,
    se: f64,
    df: f64,
}

fn welch_parts(a: &[f64], b: &[f64]) -> Result<Welch> {
    if a.len() < 2 || b.len() < 2 {
        return Err(LabError::InsufficientData("each sample needs at least two observations".into()));
    }
    let (va, vb) = (variance(a), variance(b));
    if va == 0.0 && vb == 0.0 {
        return Err(LabError::ZeroVariance("both samples are constant".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (va / na, vb / nb);
    let se = (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    Ok(Welch { diff: mean(a) - mean(b), se, df })
}

/// Welch's unequal-variance t test, two-sided.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let w = welch_parts(a, b)?;
    let t = w.diff / w.se;
    Ok(TestResult { statistic: t, p_value: t_two_sided(t, w.df), df: Some(w.df), ..Default::default() })
}

/// Standardized mean difference using the pooled (n - 1 weighted) SD.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(LabError::InsufficientData("each sample needs at least two observations".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(LabError::ZeroVariance("pooled SD is zero".into()));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// Two one-sided Welch tests of `|mean(a) - mean(b)| < bound`.
///
/// `p_value` is the larger of the two one-sided p-values; `statistic` is the
/// t of that test. The interval is the matching `1 - 2α` = 90% Welch interval.
pub fn tost_equivalence(a: &[f64], b: &[f64], bound: f64) -> Result<TestResult> {
    if bound.is_nan() || bound <= 0.0 {
        return Err(LabError::InvalidArgument("equivalence bound must be positive".into()));
    }
    let w = welch_parts(a, b)?;
    let t_lower = (w.diff + bound) / w.se;
    let t_upper_ = (w.diff - bound) / w.se;
    let p_lower = t_upper(t_lower, w.df);
    let p_upper = 1.0 - t_upper(t_upper_, w.df);
    let (statistic, p_value) = if p_lower >= p_upper { (t_lower, p_lower) } else { (t_upper_, p_upper) };
    let half = t_quantile(0.95, w.df) * w.se;
    Ok(TestResult {
        statistic,
        p_value,
        ci_low: Some(w.diff - half),
        ci_high: Some(w.diff + half),
        df: Some(w.df),
        effect_size: Some(w.diff),
        ..Default::default()
    })
}

/// Classical one-way ANOVA; `effect_size` is η² = SS_between / SS_total.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(LabError::InsufficientData("need two or more groups of two or more".into()));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let ss_total: f64 = groups.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    if ss_total == 0.0 {
        return Err(LabError::ZeroVariance("all observations are equal".into()));
    }
    let ss_between: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ss_within = groups.iter().map(|g| {
        let m = mean(g);
        g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    }).sum::<f64>();
    let (d1, d2) = ((k - 1) as f64, (n - k) as f64);
    let f = if ss_within == 0.0 { f64::INFINITY } else { (ss_between / d1) / (ss_within / d2) };
    Ok(TestResult {
        statistic: f,
        p_value: f_upper(f, d1, d2),
        df: Some(d1),
        df2: Some(d2),
        effect_size: Some(ss_between / ss_total),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::seeded;
    use proptest::prelude::*;
    use statrs::distribution::{Binomial, Discrete as _, Hypergeometric};

    fn frequencies(d: &Discrete, len: usize, draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded(seed);
        let mut counts = vec![0usize; len];
        (0..draws).for_each(|_| counts[d.draw(&mut rng)] += 1);
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn samplers_match_reference_pmfs() {
        let draws = 200_000;
        let h = frequencies(&hypergeometric(30, 12, 10), 11, draws, 1);
        let oracle = Hypergeometric::new(30, 12, 10).unwrap();
        for (x, f) in h.iter().enumerate() {
            assert!((f - oracle.pmf(x as u64)).abs() < 0.004, "hypergeometric x={x}");
        }
        let b = frequencies(&binomial_resample(7, 20), 21, draws, 2);
        let oracle = Binomial::new(0.35, 20).unwrap();
        for (k, f) in b.iter().enumerate() {
            assert!((f - oracle.pmf(k as u64)).abs() < 0.004, "binomial k={k}");
        }
        let mut rng = seeded(3);
        assert_eq!(binomial_resample(0, 9).draw(&mut rng), 0);
        assert_eq!(binomial_resample(9, 9).draw(&mut rng), 9);
        assert_eq!(hypergeometric(10, 10, 4).draw(&mut rng), 4);
        assert_eq!(hypergeometric(10, 0, 4).draw(&mut rng), 0);
    }

    #[test]
    fn chi2_statistic_by_hand() {
        // expected [[20,80],[20,80]]: 100/20 + 100/80 + 100/20 + 100/80
        let tbl = ContingencyTable::from_counts(&[[10, 90], [30, 70]]).unwrap();
        assert_eq!(pearson_chi2(&tbl).unwrap(), 12.5);
        let r = perm_chi2_independence(&tbl, 5000, &mut seeded(1)).unwrap();
        assert_eq!(r.statistic, 12.5);
        assert!(r.p_value < 0.01);
        assert_eq!(r.df, Some(1.0));
    }

    #[test]
    fn identical_rows_give_p_one() {
        let tbl = ContingencyTable::from_counts(&[[20, 30], [20, 30]]).unwrap();
        let r = perm_chi2_independence(&tbl, 2000, &mut seeded(2)).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn perfect_separation_hits_the_floor() {
        let tbl = ContingencyTable::from_counts(&[[50, 0], [0, 50]]).unwrap();
        let r = perm_chi2_independence(&tbl, 3000, &mut seeded(3)).unwrap();
        assert_eq!(r.p_value, 1.0 / 3001.0);
    }

    #[test]
    fn degenerate_tables_rejected() {
        let tbl = ContingencyTable::from_counts(&[[0, 10], [0, 12]]).unwrap();
        assert!(matches!(perm_chi2_independence(&tbl, 1000, &mut seeded(0)), Err(LabError::DegenerateTable(_))));
        assert!(ContingencyTable::from_counts(&[[0, 0], [1, 1]]).is_err());
        let ok = ContingencyTable::from_counts(&[[1, 1], [1, 1]]).unwrap();
        assert!(perm_chi2_independence(&ok, 10, &mut seeded(0)).is_err());
    }

    /// Independent oracle: exact two-sided p from the hypergeometric distribution.
    fn exact_two_proportion_p(sa: u64, na: u64, sb: u64, nb: u64) -> f64 {
        let ln_choose = |n: u64, k: u64| special::ln_gamma(n as f64 + 1.0) - special::ln_gamma(k as f64 + 1.0) - special::ln_gamma((n - k) as f64 + 1.0);
        let (n, s) = (na + nb, sa + sb);
        let obs = (sa as f64 / na as f64 - sb as f64 / nb as f64).abs();
        let mut p = 0.0;
        for x in s.saturating_sub(nb)..=s.min(na) {
            let d = (x as f64 / na as f64 - (s - x) as f64 / nb as f64).abs();
            if d >= obs - 1e-12 {
                p += (ln_choose(na, x) + ln_choose(nb, s - x) - ln_choose(n, s)).exp();
            }
        }
        p
    }

    #[test]
    fn two_proportion_examples() {
        let opts = ProportionTest { reps: 5000, ..Default::default() };
        let r = perm_two_proportion(30, 100, 10, 100, opts, &mut seeded(4)).unwrap();
        assert!((r.statistic - 0.2).abs() < 1e-15);
        assert!(r.p_value < 0.01);
        let exact = exact_two_proportion_p(30, 100, 10, 100);
        assert!(exact < 0.01);
        assert!(r.ci_low.unwrap() < 0.2 && 0.2 < r.ci_high.unwrap());

        let same = perm_two_proportion(12, 40, 12, 40, opts, &mut seeded(5)).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);

        let zero = perm_two_proportion(0, 50, 0, 50, opts, &mut seeded(6)).unwrap();
        assert_eq!((zero.statistic, zero.ci_low, zero.ci_high), (0.0, Some(0.0), Some(0.0)));
    }

    #[test]
    fn permutation_p_tracks_exact_p() {
        for &(sa, na, sb, nb) in &[(7u64, 20u64, 3u64, 25u64), (5, 30, 9, 30), (2, 10, 2, 10)] {
            let p = perm_two_proportion_p(sa, na, sb, nb, 20_000, Sided::Two, &mut seeded(8)).unwrap();
            let exact = exact_two_proportion_p(sa, na, sb, nb);
            assert!((p - exact).abs() < 0.015, "{p} vs {exact}");
        }
    }

    #[test]
    fn one_sided_direction() {
        let g = perm_two_proportion_p(20, 50, 8, 50, 2000, Sided::Greater, &mut seeded(1)).unwrap();
        let l = perm_two_proportion_p(20, 50, 8, 50, 2000, Sided::Less, &mut seeded(1)).unwrap();
        assert!(g < 0.05 && l > 0.9);
    }

    #[test]
    fn ninety_percent_interval_is_narrower() {
        let wide = perm_two_proportion(15, 60, 9, 60, ProportionTest::default(), &mut seeded(3)).unwrap();
        let narrow = perm_two_proportion(15, 60, 9, 60, ProportionTest { ci_level: 0.90, ..Default::default() }, &mut seeded(3)).unwrap();
        assert!(narrow.ci_high.unwrap() - narrow.ci_low.unwrap() < wide.ci_high.unwrap() - wide.ci_low.unwrap());
    }

    #[test]
    fn welch_by_hand() {
        let r = welch_t(&[10.0, 12.0, 14.0], &[20.0, 22.0, 24.0]).unwrap();
        // means 12 and 22, variances 4, se = sqrt(8/3)
        assert!((r.statistic - (-10.0 / (8.0f64 / 3.0).sqrt())).abs() < 1e-12);
        assert!((r.statistic + 6.1237).abs() < 1e-3);
        assert!((r.df.unwrap() - 4.0).abs() < 1e-9);
        let same = welch_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
        assert!(matches!(welch_t(&[0.0, 0.0], &[0.0, 0.0]), Err(LabError::ZeroVariance(_))));
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cohens_d_by_hand() {
        assert!((cohens_d(&[10.0, 12.0, 14.0], &[20.0, 22.0, 24.0]).unwrap() + 5.0).abs() < 1e-12);
        assert_eq!(cohens_d(&[1.0, 5.0], &[1.0, 5.0]).unwrap(), 0.0);
        assert!(cohens_d(&[3.0, 3.0], &[3.0, 3.0]).is_err());
    }

    /// Oracle: each one-sided test as a shifted two-sample Welch t.
    fn one_sided_pair(a: &[f64], b: &[f64], bound: f64) -> (f64, f64) {
        let shifted_up: Vec<f64> = a.iter().map(|x| x + bound).collect();
        let shifted_down: Vec<f64> = a.iter().map(|x| x - bound).collect();
        let lo = welch_t(&shifted_up, b).unwrap();
        let hi = welch_t(&shifted_down, b).unwrap();
        let upper_tail = |r: &TestResult| if r.statistic >= 0.0 { r.p_value / 2.0 } else { 1.0 - r.p_value / 2.0 };
        (upper_tail(&lo), 1.0 - upper_tail(&hi))
    }

    #[test]
    fn tost_matches_explicit_one_sided_tests() {
        let a: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 - 4.0).collect();
        let b: Vec<f64> = (0..55).map(|i| ((i * 11) % 19) as f64 - 6.0).collect();
        let bound = 0.5 * std_dev(&b);
        let r = tost_equivalence(&a, &b, bound).unwrap();
        let (p1, p2) = one_sided_pair(&a, &b, bound);
        assert!((r.p_value - p1.max(p2)).abs() < 1e-10);
    }

    #[test]
    fn tost_direction() {
        let a: Vec<f64> = (0..200).map(|i| (i % 10) as f64).collect();
        let eq = tost_equivalence(&a, &a, 3.0).unwrap();
        assert!(eq.p_value < 1e-6);
        let far: Vec<f64> = a.iter().map(|x| x + 50.0).collect();
        let neq = tost_equivalence(&far, &a, 1.0).unwrap();
        assert!(neq.p_value > 0.999);
        assert!(tost_equivalence(&a, &a, 0.0).is_err());
    }

    #[test]
    fn anova_examples() {
        let flat = anova_oneway(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!((flat.statistic, flat.effect_size), (0.0, Some(0.0)));
        assert_eq!(flat.p_value, 1.0);
        let r = anova_oneway(&[vec![0.0, 0.0, 1.0, 1.0], vec![10.0, 10.0, 11.0, 11.0]]).unwrap();
        // SS_b = 8 * 25 = 200, SS_t = 202
        assert!((r.effect_size.unwrap() - 200.0 / 202.0).abs() < 1e-12);
        assert!((r.effect_size.unwrap() - 0.9901).abs() < 1e-4);
        assert_eq!((r.df, r.df2), (Some(1.0), Some(6.0)));
        assert!(anova_oneway(&[vec![5.0, 5.0], vec![5.0, 5.0]]).is_err());
        assert!(anova_oneway(&[vec![5.0, 5.0]]).is_err());
    }

    fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let sp2 = ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
        (mean(a) - mean(b)) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt()
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, 2..30)
    }

    proptest! {
        #[test]
        fn welch_is_antisymmetric(a in sample(), b in sample()) {
            prop_assume!(variance(&a) > 1e-9 || variance(&b) > 1e-9);
            let ab = welch_t(&a, &b).unwrap();
            let ba = welch_t(&b, &a).unwrap();
            prop_assert!((ab.statistic + ba.statistic).abs() < 1e-9 * ab.statistic.abs().max(1.0));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((ab.df.unwrap() - ba.df.unwrap()).abs() < 1e-9 * ab.df.unwrap());
        }

        #[test]
        fn two_group_anova_is_pooled_t_squared(a in sample(), b in sample()) {
            prop_assume!(variance(&a) + variance(&b) > 1e-6);
            let f = anova_oneway(&[a.clone(), b.clone()]).unwrap().statistic;
            let t = pooled_t(&a, &b);
            prop_assert!((f - t * t).abs() <= 1e-9 * f.abs().max(1.0));
        }

        #[test]
        fn permutation_p_in_unit_interval(sa in 0u64..30, sb in 0u64..30, seed in 0u64..1000) {
            let p = perm_two_proportion_p(sa, 30, sb, 30, 1000, Sided::Two, &mut seeded(seed)).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }

    #[test]
    fn larger_statistic_never_gives_larger_p() {
        let mut last = 1.0;
        for sa in 10..=30 {
            let p = perm_two_proportion_p(sa, 60, 10, 60, 4000, Sided::Greater, &mut seeded(42)).unwrap();
            assert!(p <= last + 1e-12, "sa={sa}");
            last = p;
        }
    }

    #[test]
    fn results_are_seed_deterministic() {
        let a = perm_two_proportion(9, 31, 4, 29, ProportionTest::default(), &mut seeded(10)).unwrap();
        let b = perm_two_proportion(9, 31, 4, 29, ProportionTest::default(), &mut seeded(10)).unwrap();
        assert_eq!(a, b);
    }
}
