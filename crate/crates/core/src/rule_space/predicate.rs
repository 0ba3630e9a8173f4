//! A small predicate language for defining rules in config files.
//!
//! ```json
//! {"op": "all", "of": [
//!     {"op": "even", "at": "x1"},
//!     {"op": "cmp", "lhs": {"diff": [2, 1]}, "cmp": "ge", "rhs": {"const": 3}}
//! ]}
//! ```

use serde::{Deserialize, Serialize};

use super::Triple;

/// An integer-valued expression over a triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    X1,
    X2,
    X3,
    Sum,
    Const(i64),
    /// `x_a - x_b` with 1-based positions.
    Diff(u8, u8),
}

impl Term {
    pub fn eval(&self, t: &Triple) -> i64 {
        let xs = t.components();
        let at = |p: u8| xs[(p.clamp(1, 3) - 1) as usize];
        match *self {
            Term::X1 => xs[0],
            Term::X2 => xs[1],
            Term::X3 => xs[2],
            Term::Sum => xs.iter().sum(),
            Term::Const(c) => c,
            Term::Diff(a, b) => at(a) - at(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Cmp {
    fn apply(&self, l: i64, r: i64) -> bool {
        match self {
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Eq => l == r,
            Cmp::Ne => l != r,
            Cmp::Ge => l >= r,
            Cmp::Gt => l > r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Predicate {
    True,
    All { of: Vec<Predicate> },
    Any { of: Vec<Predicate> },
    Not { of: Box<Predicate> },
    Even { at: Term },
    Odd { at: Term },
    /// `at mod modulus == rem` (Euclidean remainder).
    Mod { at: Term, modulus: i64, rem: i64 },
    Cmp { lhs: Term, cmp: Cmp, rhs: Term },
}

impl Predicate {
    pub fn eval(&self, t: &Triple) -> bool {
        match self {
            Predicate::True => true,
            Predicate::All { of } => of.iter().all(|p| p.eval(t)),
            Predicate::Any { of } => of.iter().any(|p| p.eval(t)),
            Predicate::Not { of } => !of.eval(t),
            Predicate::Even { at } => at.eval(t).rem_euclid(2) == 0,
            Predicate::Odd { at } => at.eval(t).rem_euclid(2) == 1,
            Predicate::Mod { at, modulus, rem } => {
                *modulus != 0 && at.eval(t).rem_euclid(*modulus) == rem.rem_euclid(*modulus)
            }
            Predicate::Cmp { lhs, cmp, rhs } => cmp.apply(lhs.eval(t), rhs.eval(t)),
        }
    }
}
