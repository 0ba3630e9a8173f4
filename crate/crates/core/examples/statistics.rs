use rulelab::seeding::seeded;
use rulelab::stats::{
    anova_oneway, cohens_d, perm_chi2_independence, perm_two_proportion, tost_equivalence, welch_t, ContingencyTable,
    ProportionTest,
};

fn main() -> rulelab::error::Result<()> {
    let mut rng = seeded(5);
    let tbl = ContingencyTable::from_counts(&[[10, 90], [30, 70]])?;
    let chi = perm_chi2_independence(&tbl, 5000, &mut rng)?;
    println!("chi2 = {} (df {:?}), permutation p = {:.4}", chi.statistic, chi.df, chi.p_value);

    let prop = perm_two_proportion(30, 100, 10, 100, ProportionTest::default(), &mut rng)?;
    println!("30/100 vs 10/100: diff {:.2}, p = {:.4}, 95% CI [{:.3}, {:.3}]", prop.statistic, prop.p_value, prop.ci_low.unwrap(), prop.ci_high.unwrap());

    let (a, b) = ([10.0, 12.0, 14.0], [20.0, 22.0, 24.0]);
    let t = welch_t(&a, &b)?;
    println!("welch t = {:.4}, df = {:.2}, p = {:.4}, d = {:.2}", t.statistic, t.df.unwrap(), t.p_value, cohens_d(&a, &b)?);

    let x: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
    let y: Vec<f64> = (0..40).map(|i| (i % 7) as f64 + 0.1).collect();
    let eq = tost_equivalence(&x, &y, 1.0)?;
    println!("equivalence within ±1: p = {:.2e}, 90% CI [{:.3}, {:.3}]", eq.p_value, eq.ci_low.unwrap(), eq.ci_high.unwrap());

    let f = anova_oneway(&[a.to_vec(), b.to_vec(), vec![15.0, 16.0, 17.0]])?;
    println!("anova F({}, {}) = {:.2}, p = {:.4}", f.df.unwrap(), f.df2.unwrap(), f.statistic, f.p_value);
    Ok(())
}
