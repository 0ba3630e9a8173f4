use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, Rule, Triple};
use crate::error::{LabError, Result};
use crate::seeding::LabRng;

/// The set of in-domain triples satisfying a rule, in domain index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    domain: Domain,
    members: Vec<u32>,
    mask: Vec<bool>,
}

impl Extension {
    pub fn of(rule: &Rule, domain: Domain) -> Self {
        Self::from_mask(domain, domain.iter().map(|t| rule.contains(&t)).collect())
    }

    fn from_mask(domain: Domain, mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i as u32))
            .collect();
        Extension { domain, members, mask }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.members
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.domain.contains(t) && self.mask[self.domain.index_of(t)]
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.members.iter().map(|&i| self.domain.triple_at(i as usize))
    }

    pub fn is_subset_of(&self, other: &Extension) -> bool {
        self.members.iter().all(|&i| other.mask[i as usize])
    }

    pub fn intersection(&self, other: &Extension) -> Extension {
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Self::from_mask(self.domain, mask)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &Extension) -> Extension {
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect();
        Self::from_mask(self.domain, mask)
    }

    /// Uniform draw; `None` when empty.
    pub fn sample(&self, rng: &mut LabRng) -> Option<Triple> {
        if self.members.is_empty() {
            return None;
        }
        let i = self.members[rng.gen_range(0..self.members.len())];
        Some(self.domain.triple_at(i as usize))
    }
}

/// `true` iff `t` satisfies `rule`.
pub fn contains(rule: &Rule, t: &Triple) -> bool {
    rule.contains(t)
}

pub fn extension(rule: &Rule, domain: Domain) -> Extension {
    Extension::of(rule, domain)
}

/// Strong-sampling likelihood `p(t | rule)`: uniform over the extension.
pub fn likelihood(rule: &Rule, t: &Triple, domain: Domain) -> Result<f64> {
    domain.check(t)?;
    let ext = Extension::of(rule, domain);
    if ext.is_empty() {
        return Err(LabError::InvalidRule(rule.name().to_string()));
    }
    Ok(if ext.contains(t) { 1.0 / ext.len() as f64 } else { 0.0 })
}

pub fn extensionally_equal(r1: &Rule, r2: &Rule, domain: Domain) -> bool {
    Extension::of(r1, domain) == Extension::of(r2, domain)
}

/// How a hypothesis generates data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LikelihoodModel {
    /// Uniform over the rule's extension (size principle).
    #[default]
    Strong,
    /// Uniform over the extension with probability `1 - epsilon`, uniform over
    /// the whole domain otherwise. Every datum has positive likelihood.
    Noisy { epsilon: f64 },
}

/// An ordered rule catalog with a prior, over a fixed domain.
///
/// Catalog positions are identities: belief vectors, reports and feedback
/// tables are all indexed by them.
#[derive(Clone, Debug)]
pub struct HypothesisSpace {
    domain: Domain,
    catalog: Vec<Rule>,
    prior: Vec<f64>,
    likelihood: LikelihoodModel,
    extensions: Vec<Extension>,
}

impl HypothesisSpace {
    pub fn new(
        domain: Domain,
        catalog: Vec<Rule>,
        prior: Option<Vec<f64>>,
        likelihood: LikelihoodModel,
    ) -> Result<Self> {
        if catalog.is_empty() {
            return Err(LabError::InvalidSpace("empty catalog".into()));
        }
        for (i, r) in catalog.iter().enumerate() {
            if catalog[..i].iter().any(|o| o.name() == r.name()) {
                return Err(LabError::InvalidSpace(format!("duplicate rule name `{}`", r.name())));
            }
        }
        let prior = match prior {
            Some(p) => p,
            None => vec![1.0 / catalog.len() as f64; catalog.len()],
        };
        if prior.len() != catalog.len() {
            return Err(LabError::InvalidSpace(format!(
                "prior has {} entries for {} rules",
                prior.len(),
                catalog.len()
            )));
        }
        if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(LabError::InvalidSpace("prior entries must be finite and non-negative".into()));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidSpace(format!("prior sums to {total}, not 1")));
        }
        if let LikelihoodModel::Noisy { epsilon } = likelihood {
            if !(0.0..1.0).contains(&epsilon) {
                return Err(LabError::InvalidSpace(format!("noise level {epsilon} outside [0, 1)")));
            }
        }

        let extensions: Vec<Extension> = catalog.iter().map(|r| Extension::of(r, domain)).collect();
        for (r, e) in catalog.iter().zip(&extensions) {
            if e.is_empty() {
                return Err(LabError::InvalidRule(r.name().to_string()));
            }
        }
        for i in 0..extensions.len() {
            for j in 0..i {
                if extensions[i] == extensions[j] {
                    return Err(LabError::InvalidSpace(format!(
                        "rules `{}` and `{}` have identical extensions",
                        catalog[j].name(),
                        catalog[i].name()
                    )));
                }
            }
        }
        Ok(HypothesisSpace { domain, catalog, prior, likelihood, extensions })
    }

    /// The eight built-in rules, uniform prior, strong sampling.
    pub fn default_space(domain: Domain) -> Self {
        Self::new(domain, Rule::builtin_catalog(), None, LikelihoodModel::Strong)
            .expect("built-in catalog is valid on every domain with M >= 6")
    }

    pub fn single(domain: Domain, rule: Rule) -> Result<Self> {
        Self::new(domain, vec![rule], None, LikelihoodModel::Strong)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.catalog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.catalog.is_empty()
    }

    pub fn catalog(&self) -> &[Rule] {
        &self.catalog
    }

    pub fn rule(&self, index: usize) -> &Rule {
        &self.catalog[index]
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn likelihood_model(&self) -> LikelihoodModel {
        self.likelihood
    }

    pub fn extension(&self, index: usize) -> &Extension {
        &self.extensions[index]
    }

    pub fn index_of(&self, rule: &Rule) -> Option<usize> {
        self.catalog.iter().position(|r| r == rule)
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.catalog.iter().position(|r| r.name() == name)
    }

    pub fn require_index(&self, rule: &Rule) -> Result<usize> {
        self.index_of(rule).ok_or_else(|| LabError::UnknownRule(rule.name().to_string()))
    }

    /// Whether catalog rule `h` picks out the same triples as `rule`. Skips
    /// recomputing `rule`'s extension when `rule` is itself in the catalog.
    pub fn same_extension(&self, h: usize, rule: &Rule) -> bool {
        match self.index_of(rule) {
            Some(i) => i == h || self.extensions[i] == self.extensions[h],
            None => self.extensions[h] == Extension::of(rule, self.domain),
        }
    }

    /// Catalog index of the rule whose extension equals `rule`'s, if any.
    pub fn index_of_extension(&self, rule: &Rule) -> Option<usize> {
        let ext = Extension::of(rule, self.domain);
        self.extensions.iter().position(|e| *e == ext)
    }

    /// `p(d | h)` by domain index.
    pub fn likelihood_at(&self, h: usize, index: usize) -> f64 {
        let ext = &self.extensions[h];
        let inside = ext.contains_index(index);
        match self.likelihood {
            LikelihoodModel::Strong => {
                if inside {
                    1.0 / ext.len() as f64
                } else {
                    0.0
                }
            }
            LikelihoodModel::Noisy { epsilon } => {
                let floor = epsilon / self.domain.size() as f64;
                if inside {
                    (1.0 - epsilon) / ext.len() as f64 + floor
                } else {
                    floor
                }
            }
        }
    }

    /// `p(t | h)`; zero for out-of-domain triples.
    pub fn likelihood(&self, h: usize, t: &Triple) -> f64 {
        if !self.domain.contains(t) {
            return 0.0;
        }
        self.likelihood_at(h, self.domain.index_of(t))
    }

    pub fn log_likelihood(&self, h: usize, t: &Triple) -> f64 {
        self.likelihood(h, t).ln()
    }

    /// Domain indices with positive likelihood under `h`.
    pub fn support(&self, h: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        match self.likelihood {
            LikelihoodModel::Noisy { epsilon } if epsilon > 0.0 => Box::new(0..self.domain.size()),
            _ => Box::new(self.extensions[h].indices().iter().map(|&i| i as usize)),
        }
    }

    /// Draw `d ~ p(d | h)`.
    pub fn sample_datum(&self, h: usize, rng: &mut LabRng) -> Triple {
        if let LikelihoodModel::Noisy { epsilon } = self.likelihood {
            if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                return self.domain.triple_at(rng.gen_range(0..self.domain.size()));
            }
        }
        self.extensions[h].sample(rng).expect("catalog extensions are non-empty")
    }
}

/// Serialized form of a hypothesis space, as found in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub max_value: u32,
    #[serde(default = "Rule::builtin_catalog")]
    pub catalog: Vec<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    #[serde(default)]
    pub likelihood: LikelihoodModel,
}

impl SpaceConfig {
    pub fn build(&self) -> Result<HypothesisSpace> {
        HypothesisSpace::new(
            Domain::new(self.max_value)?,
            self.catalog.clone(),
            self.prior.clone(),
            self.likelihood,
        )
    }
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            max_value: Domain::MONTE_CARLO_BOUND,
            catalog: Rule::builtin_catalog(),
            prior: None,
            likelihood: LikelihoodModel::Strong,
        }
    }
}
