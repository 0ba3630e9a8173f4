//! Truth-sampled data converge on the true rule; data from a fixed stated
//! hypothesis converge on that hypothesis instead. Prints CSV curves.

use std::sync::Arc;

use rulelab::agent::Reporting;
use rulelab::rule_space::{Domain, HypothesisSpace, RuleTag};
use rulelab::theory::{population_run, write_curve_csv, DataSource, HStar};

fn main() -> rulelab::error::Result<()> {
    let space = Arc::new(HypothesisSpace::default_space(Domain::monte_carlo()));
    let ae = space.require_index(&RuleTag::AllEven.into())?;
    let ap2 = space.require_index(&RuleTag::ArithProg2.into())?;

    let truth = population_run(&space, &DataSource::Truth { rule: RuleTag::AllEven.into() }, 40, 100, Reporting::Sampled, 1)?;
    println!("# ALL_EVEN mass, truth-sampled data");
    write_curve_csv(&truth.curve(ae), std::io::stdout())?;

    let fixed = population_run(&space, &DataSource::Hypothesis { h_star: HStar::Fixed(ap2) }, 40, 100, Reporting::Sampled, 2)?;
    println!("# ARITH_PROG_2 mass, data from ARITH_PROG_2");
    write_curve_csv(&fixed.curve(ap2), std::io::stdout())?;
    println!("# ALL_EVEN mass under the same data: {:.2e} -> {:.2e}", fixed.mean[0][ae], fixed.mean[40][ae]);
    Ok(())
}
