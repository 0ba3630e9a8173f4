//! A small simulated experiment: per-condition measures and comparisons.

use rulelab::experiment::{analyze, run_experiment, write_summary_csv, ComparisonSpec, ExperimentConfig};
use rulelab::feedback::FeedbackCondition;
use rulelab::stats::Sided;

fn main() -> rulelab::error::Result<()> {
    let mut cfg = ExperimentConfig { seed: 11, permutation_reps: 2000, bootstrap_reps: 2000, ..Default::default() };
    cfg.conditions.iter_mut().for_each(|c| c.agents = 300);
    cfg.comparisons = vec![
        ComparisonSpec { a: FeedbackCondition::RandomSequence, b: FeedbackCondition::RuleConfirming, sided: Sided::Greater, tost: false },
        ComparisonSpec { a: FeedbackCondition::RuleConfirming, b: FeedbackCondition::RuleDisconfirming, sided: Sided::Two, tost: true },
    ];
    let results = run_experiment(&cfg, None)?;
    write_summary_csv(&results, std::io::stdout())?;
    let report = analyze(&results, &cfg)?;
    if let Some(o) = &report.comparison.omnibus {
        println!("discovery x condition: chi2 = {:.2}, p = {:.4}", o.statistic, o.p_value);
    }
    if let Some(a) = &report.comparison.anova {
        println!("ΔBelief anova: F = {:.2}, p = {:.2e}, eta^2 = {:.3}", a.statistic, a.p_value, a.effect_size.unwrap_or(f64::NAN));
    }
    for p in &report.comparison.pairs {
        print!("{} - {}: discovery diff {:.3} (p = {:.4})", p.a, p.b, p.discovery.statistic, p.discovery.p_value);
        if let (Some(t), Some(d)) = (&p.delta, p.cohens_d) {
            print!(", ΔBelief t = {:.2}, d = {d:.2}", t.statistic);
        }
        println!();
    }
    Ok(())
}
