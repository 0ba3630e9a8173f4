//! The triple domain, rule catalog, extensions and likelihoods.

mod predicate;
mod rule;
mod space;
mod triple;

pub use predicate::{Cmp, Predicate, Term};
pub use rule::{CustomRule, Rule, RuleTag};
pub use space::{
    contains, extension, extensionally_equal, likelihood, Extension, HypothesisSpace, LikelihoodModel,
    SpaceConfig,
};
pub use triple::{Domain, Triple, MAX_BOUND};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::LabError;

    /// Brute-force count by nested loops with independently written predicates.
    fn count(m: u32, pred: impl Fn(i64, i64, i64) -> bool) -> usize {
        let mut n = 0;
        for a in 1..=m as i64 {
            for b in 1..=m as i64 {
                for c in 1..=m as i64 {
                    if pred(a, b, c) {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn extension_sizes_match_enumeration() {
        let d = Domain::exact();
        let oracle = [
            (RuleTag::AllEven, count(10, |a, b, c| (a | b | c) & 1 == 0)),
            (RuleTag::Ascending, count(10, |a, b, c| a < b && b < c)),
            (RuleTag::ArithProg2, count(10, |a, b, c| b == a + 2 && c == a + 4)),
            (RuleTag::ArithProg, count(10, |a, b, c| b > a && a + c == 2 * b)),
            (RuleTag::EvenAscending, count(10, |a, b, c| (a | b | c) & 1 == 0 && a < b && b < c)),
            (RuleTag::SameParity, count(10, |a, b, c| (a ^ b) & 1 == 0 && (b ^ c) & 1 == 0)),
            (RuleTag::Any, 1000),
            (RuleTag::SumEven, count(10, |a, b, c| (a + b + c) % 2 == 0)),
        ];
        assert_eq!(oracle[0].1, 125);
        assert_eq!(oracle[2].1, 6);
        for (tag, n) in oracle {
            assert_eq!(extension(&tag.into(), d).len(), n, "{}", tag.name());
        }
    }

    #[test]
    fn likelihood_examples() {
        let d = Domain::exact();
        let l = likelihood(&RuleTag::ArithProg2.into(), &Triple::new(2, 4, 6), d).unwrap();
        assert_eq!(l, 1.0 / 6.0);
        assert_eq!(likelihood(&RuleTag::AllEven.into(), &Triple::new(3, 5, 7), d).unwrap(), 0.0);
        assert_eq!(likelihood(&RuleTag::Any.into(), &Triple::new(1, 1, 1), d).unwrap(), 1.0 / 1000.0);
    }

    #[test]
    fn likelihood_rejects_empty_extension() {
        let never = Rule::custom("NEVER", Predicate::Not { of: Box::new(Predicate::True) });
        let err = likelihood(&never, &Triple::SEED, Domain::exact()).unwrap_err();
        assert!(matches!(err, LabError::InvalidRule(_)));
    }

    #[test]
    fn extensional_equality_examples() {
        let d = Domain::exact();
        let r = |t: RuleTag| Rule::Builtin(t);
        assert!(extensionally_equal(&r(RuleTag::AllEven), &r(RuleTag::AllEven), d));
        assert!(!extensionally_equal(&r(RuleTag::AllEven), &r(RuleTag::EvenAscending), d));
        assert!(!extensionally_equal(&r(RuleTag::Ascending), &r(RuleTag::Any), d));
        let same = Rule::custom("EVENS", RuleTag::AllEven.as_predicate());
        assert!(extensionally_equal(&same, &r(RuleTag::AllEven), d));
        let space = HypothesisSpace::default_space(d);
        let ae = space.index_of(&r(RuleTag::AllEven)).unwrap();
        for h in 0..space.len() {
            for rule in [r(RuleTag::AllEven), same.clone(), r(RuleTag::Ascending)] {
                assert_eq!(space.same_extension(h, &rule), extensionally_equal(space.rule(h), &rule, d));
            }
        }
        assert!(space.same_extension(ae, &same));
    }

    #[test]
    fn likelihood_sums_to_one_over_each_extension() {
        for m in [6, 10, 13] {
            let space = HypothesisSpace::default_space(Domain::new(m).unwrap());
            for h in 0..space.len() {
                let total: f64 = space.extension(h).triples().map(|t| space.likelihood(h, &t)).sum();
                assert!((total - 1.0).abs() < 1e-12, "M={m} {}", space.rule(h));
            }
        }
    }

    #[test]
    fn noisy_likelihood_sums_to_one_over_domain() {
        let d = Domain::exact();
        let space =
            HypothesisSpace::new(d, Rule::builtin_catalog(), None, LikelihoodModel::Noisy { epsilon: 0.1 }).unwrap();
        for h in 0..space.len() {
            let total: f64 = (0..d.size()).map(|i| space.likelihood_at(h, i)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn structural_relations_between_extensions() {
        for m in [6, 10, 17] {
            let d = Domain::new(m).unwrap();
            let e = |t: RuleTag| extension(&t.into(), d);
            assert_eq!(e(RuleTag::EvenAscending), e(RuleTag::AllEven).intersection(&e(RuleTag::Ascending)));
            assert!(e(RuleTag::ArithProg2).is_subset_of(&e(RuleTag::ArithProg)));
            assert!(e(RuleTag::ArithProg).is_subset_of(&e(RuleTag::Ascending)));
        }
    }

    #[test]
    fn default_catalog_is_pairwise_distinct_and_contains_seed() {
        let space = HypothesisSpace::default_space(Domain::exact());
        for h in 0..space.len() {
            assert!(space.extension(h).contains(&Triple::SEED));
        }
    }

    #[test]
    fn space_construction_validates() {
        let d = Domain::exact();
        let dup = vec![Rule::Builtin(RuleTag::AllEven), Rule::custom("EVENS", RuleTag::AllEven.as_predicate())];
        assert!(matches!(HypothesisSpace::new(d, dup, None, LikelihoodModel::Strong), Err(LabError::InvalidSpace(_))));
        let bad_prior = HypothesisSpace::new(d, Rule::builtin_catalog(), Some(vec![0.5; 8]), LikelihoodModel::Strong);
        assert!(bad_prior.is_err());
        let neg = HypothesisSpace::new(
            d,
            vec![RuleTag::AllEven.into(), RuleTag::Any.into()],
            Some(vec![1.5, -0.5]),
            LikelihoodModel::Strong,
        );
        assert!(neg.is_err());
    }

    #[test]
    fn space_config_defaults_to_builtins() {
        let cfg: SpaceConfig = serde_json::from_str(r#"{"max_value": 10}"#).unwrap();
        let space = cfg.build().unwrap();
        assert_eq!(space.len(), 8);
        assert_eq!(space.likelihood_model(), LikelihoodModel::Strong);
        assert_eq!(space.index_of_name("SUM_EVEN"), Some(7));
    }
}
