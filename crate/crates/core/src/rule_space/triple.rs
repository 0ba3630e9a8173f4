use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// An ordered sequence of three positive integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Triple(pub [u32; 3]);

impl Triple {
    pub const SEED: Triple = Triple([2, 4, 6]);

    pub fn new(x1: u32, x2: u32, x3: u32) -> Self {
        Triple([x1, x2, x3])
    }

    pub fn x1(&self) -> u32 {
        self.0[0]
    }

    pub fn x2(&self) -> u32 {
        self.0[1]
    }

    pub fn x3(&self) -> u32 {
        self.0[2]
    }

    pub fn components(&self) -> [i64; 3] {
        [self.0[0] as i64, self.0[1] as i64, self.0[2] as i64]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.0[0], self.0[1], self.0[2])
    }
}

impl From<(u32, u32, u32)> for Triple {
    fn from((a, b, c): (u32, u32, u32)) -> Self {
        Triple([a, b, c])
    }
}

/// Largest supported bound; keeps the domain index within `u32`.
pub const MAX_BOUND: u32 = 1000;

/// The bounded cube `[1, M]^3` of triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    max_value: u32,
}

impl Domain {
    pub const EXACT_BOUND: u32 = 10;
    pub const MONTE_CARLO_BOUND: u32 = 50;

    pub fn new(max_value: u32) -> Result<Self> {
        if max_value < 6 {
            return Err(LabError::InvalidDomain(format!(
                "bound {max_value} excludes the seed triple 2-4-6 (need M >= 6)"
            )));
        }
        if max_value > MAX_BOUND {
            return Err(LabError::InvalidDomain(format!(
                "bound {max_value} exceeds the supported maximum {MAX_BOUND}"
            )));
        }
        Ok(Domain { max_value })
    }

    pub fn exact() -> Self {
        Domain { max_value: Self::EXACT_BOUND }
    }

    pub fn monte_carlo() -> Self {
        Domain { max_value: Self::MONTE_CARLO_BOUND }
    }

    pub fn max_value(&self) -> u32 {
        self.max_value
    }

    /// Number of triples, `M^3`.
    pub fn size(&self) -> usize {
        let m = self.max_value as usize;
        m * m * m
    }

    pub fn contains(&self, t: &Triple) -> bool {
        t.0.iter().all(|&x| x >= 1 && x <= self.max_value)
    }

    pub fn check(&self, t: &Triple) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(LabError::OutOfDomain(t.to_string(), self.max_value))
        }
    }

    /// Row-major position of `t`; caller guarantees `t` is in-domain.
    pub fn index_of(&self, t: &Triple) -> usize {
        let m = self.max_value as usize;
        let [a, b, c] = t.0;
        ((a as usize - 1) * m + (b as usize - 1)) * m + (c as usize - 1)
    }

    pub fn triple_at(&self, index: usize) -> Triple {
        let m = self.max_value as usize;
        let c = index % m;
        let b = (index / m) % m;
        let a = index / (m * m);
        Triple([a as u32 + 1, b as u32 + 1, c as u32 + 1])
    }

    pub fn iter(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.size()).map(move |i| self.triple_at(i))
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::exact()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_below_six_is_rejected() {
        assert!(Domain::new(5).is_err());
        assert!(Domain::new(6).is_ok());
    }

    #[test]
    fn index_round_trips_over_whole_domain() {
        let d = Domain::exact();
        assert_eq!(d.size(), 1000);
        for (i, t) in d.iter().enumerate() {
            assert_eq!(d.index_of(&t), i);
        }
        assert_eq!(d.triple_at(0), Triple::new(1, 1, 1));
        assert_eq!(d.triple_at(999), Triple::new(10, 10, 10));
    }

    #[test]
    fn out_of_domain_triples_are_reported() {
        let d = Domain::exact();
        assert!(d.check(&Triple::new(2, 4, 6)).is_ok());
        assert!(matches!(d.check(&Triple::new(0, 4, 6)), Err(LabError::OutOfDomain(..))));
        assert!(d.check(&Triple::new(2, 4, 11)).is_err());
    }

    #[test]
    fn display_uses_hyphens() {
        assert_eq!(Triple::SEED.to_string(), "2-4-6");
    }
}
