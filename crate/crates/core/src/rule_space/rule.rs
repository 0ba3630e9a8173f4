use std::fmt;

use serde::{Deserialize, Serialize};

use super::predicate::{Cmp, Predicate, Term};
use super::Triple;

/// Built-in rule catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleTag {
    AllEven,
    Ascending,
    #[serde(rename = "ARITH_PROG_2")]
    ArithProg2,
    ArithProg,
    EvenAscending,
    SameParity,
    Any,
    SumEven,
}

impl RuleTag {
    pub const ALL: [RuleTag; 8] = [
        RuleTag::AllEven,
        RuleTag::Ascending,
        RuleTag::ArithProg2,
        RuleTag::ArithProg,
        RuleTag::EvenAscending,
        RuleTag::SameParity,
        RuleTag::Any,
        RuleTag::SumEven,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RuleTag::AllEven => "ALL_EVEN",
            RuleTag::Ascending => "ASCENDING",
            RuleTag::ArithProg2 => "ARITH_PROG_2",
            RuleTag::ArithProg => "ARITH_PROG",
            RuleTag::EvenAscending => "EVEN_ASCENDING",
            RuleTag::SameParity => "SAME_PARITY",
            RuleTag::Any => "ANY",
            RuleTag::SumEven => "SUM_EVEN",
        }
    }

    pub fn from_name(name: &str) -> Option<RuleTag> {
        RuleTag::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Plain-language statement a participant might give for this rule.
    pub fn describe(&self) -> &'static str {
        match self {
            RuleTag::AllEven => "all three numbers are even",
            RuleTag::Ascending => "the numbers are increasing",
            RuleTag::ArithProg2 => "each number goes up by 2",
            RuleTag::ArithProg => "the numbers go up by the same amount each time",
            RuleTag::EvenAscending => "even numbers in increasing order",
            RuleTag::SameParity => "the numbers are all odd or all even",
            RuleTag::Any => "any three numbers",
            RuleTag::SumEven => "the sum of the numbers is even",
        }
    }

    pub fn contains(&self, t: &Triple) -> bool {
        let [a, b, c] = t.components();
        let even = |x: i64| x % 2 == 0;
        match self {
            RuleTag::AllEven => even(a) && even(b) && even(c),
            RuleTag::Ascending => a < b && b < c,
            RuleTag::ArithProg2 => b - a == 2 && c - b == 2,
            RuleTag::ArithProg => b - a >= 1 && c - b == b - a,
            RuleTag::EvenAscending => even(a) && even(b) && even(c) && a < b && b < c,
            RuleTag::SameParity => even(a) == even(b) && even(b) == even(c),
            RuleTag::Any => true,
            RuleTag::SumEven => even(a + b + c),
        }
    }

    /// The same rule written in the predicate language.
    pub fn as_predicate(&self) -> Predicate {
        use Term::*;
        let all_even = || Predicate::All {
            of: vec![Predicate::Even { at: X1 }, Predicate::Even { at: X2 }, Predicate::Even { at: X3 }],
        };
        let ascending = || Predicate::All {
            of: vec![
                Predicate::Cmp { lhs: X1, cmp: Cmp::Lt, rhs: X2 },
                Predicate::Cmp { lhs: X2, cmp: Cmp::Lt, rhs: X3 },
            ],
        };
        match self {
            RuleTag::AllEven => all_even(),
            RuleTag::Ascending => ascending(),
            RuleTag::ArithProg2 => Predicate::All {
                of: vec![
                    Predicate::Cmp { lhs: Diff(2, 1), cmp: Cmp::Eq, rhs: Const(2) },
                    Predicate::Cmp { lhs: Diff(3, 2), cmp: Cmp::Eq, rhs: Const(2) },
                ],
            },
            RuleTag::ArithProg => Predicate::All {
                of: vec![
                    Predicate::Cmp { lhs: Diff(2, 1), cmp: Cmp::Ge, rhs: Const(1) },
                    Predicate::Cmp { lhs: Diff(3, 2), cmp: Cmp::Eq, rhs: Diff(2, 1) },
                ],
            },
            RuleTag::EvenAscending => Predicate::All { of: vec![all_even(), ascending()] },
            RuleTag::SameParity => Predicate::Any {
                of: vec![
                    all_even(),
                    Predicate::All {
                        of: vec![Predicate::Odd { at: X1 }, Predicate::Odd { at: X2 }, Predicate::Odd { at: X3 }],
                    },
                ],
            },
            RuleTag::Any => Predicate::True,
            RuleTag::SumEven => Predicate::Even { at: Sum },
        }
    }
}

/// A rule defined in the predicate language, typically loaded from config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomRule {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub predicate: Predicate,
}

/// A hypothesis about the hidden rule: a named predicate over triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rule {
    Builtin(RuleTag),
    Custom(CustomRule),
}

impl Rule {
    pub fn custom(name: impl Into<String>, predicate: Predicate) -> Self {
        Rule::Custom(CustomRule { name: name.into(), description: None, predicate })
    }

    pub fn name(&self) -> &str {
        match self {
            Rule::Builtin(tag) => tag.name(),
            Rule::Custom(c) => &c.name,
        }
    }

    pub fn tag(&self) -> Option<RuleTag> {
        match self {
            Rule::Builtin(tag) => Some(*tag),
            Rule::Custom(_) => None,
        }
    }

    pub fn describe(&self) -> &str {
        match self {
            Rule::Builtin(tag) => tag.describe(),
            Rule::Custom(c) => c.description.as_deref().unwrap_or(&c.name),
        }
    }

    pub fn contains(&self, t: &Triple) -> bool {
        match self {
            Rule::Builtin(tag) => tag.contains(t),
            Rule::Custom(c) => c.predicate.eval(t),
        }
    }

    pub fn builtin_catalog() -> Vec<Rule> {
        RuleTag::ALL.into_iter().map(Rule::Builtin).collect()
    }
}

impl From<RuleTag> for Rule {
    fn from(tag: RuleTag) -> Self {
        Rule::Builtin(tag)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
