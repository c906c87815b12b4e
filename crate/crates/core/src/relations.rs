//! Spatial relation classification between two interpretations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::Relation;
use crate::ink::{BBox, Observable, StrokeSet};

pub const FEATURES: usize = 7;
pub type Features = [f64; FEATURES];

pub const SYM: &str = "SYM";
pub const EXPR: &str = "EXPR";
pub const GEN: &str = "GEN";

/// Lowest relation score ever returned.
pub const R_FLOOR: f64 = 1e-300;

/// Bounding-box features of `b2` relative to `b1`, normalized by the mean
/// of the two diagonals.
pub fn box_features(b1: &BBox, b2: &BBox, eps: f64) -> Features {
    let n = (0.5 * (b1.diagonal() + b2.diagonal())).max(eps);
    features_with_normalizer(b1, b2, n, eps)
}

pub fn features_with_normalizer(b1: &BBox, b2: &BBox, n: f64, eps: f64) -> Features {
    [
        (b2.left - b1.left) / n,
        (b2.right - b1.right) / n,
        (b2.left - b1.right) / n,
        (b2.bottom - b1.bottom) / n,
        (b2.top - b1.top) / n,
        (b2.top - b1.bottom) / n,
        b1.overlap(b2, eps),
    ]
}

pub fn relation_features(obs: &Observable, o1: StrokeSet, o2: StrokeSet) -> Result<Features> {
    Ok(box_features(&obs.bbox(o1)?, &obs.bbox(o2)?, obs.degenerate_eps()))
}

/// Specificity chain of a terminal: itself, its stereotype, SYM, GEN.
pub fn terminal_chain(name: &str, class: &str) -> Vec<String> {
    let mut c = vec![name.to_string()];
    if class != name {
        c.push(class.to_string());
    }
    c.push(SYM.into());
    c.push(GEN.into());
    c
}

pub fn expr_chain() -> Vec<String> {
    vec![EXPR.into(), GEN.into()]
}

/// Running Gaussian statistics of the features of one relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub n: usize,
    pub mean: Features,
    pub std: Features,
}

impl FeatureStats {
    fn from_samples(samples: &[Features], sigma_floor: f64) -> Self {
        let n = samples.len();
        let mut mean = [0.0; FEATURES];
        let mut std = [sigma_floor; FEATURES];
        for s in samples {
            for i in 0..FEATURES {
                mean[i] += s[i] / n as f64;
            }
        }
        if n > 1 {
            for i in 0..FEATURES {
                let var: f64 =
                    samples.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1) as f64;
                std[i] = var.sqrt().max(sigma_floor);
            }
        }
        FeatureStats { n, mean, std }
    }

    fn log_density(&self, f: &Features) -> f64 {
        let mut l = 0.0;
        for i in 0..FEATURES {
            let z = (f[i] - self.mean[i]) / self.std[i];
            l += -0.5 * z * z - self.std[i].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        l
    }
}

/// Per-relation statistics for one class pair; missing relations were never
/// observed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassedGaussians {
    pub relations: BTreeMap<Relation, FeatureStats>,
}

impl ClassedGaussians {
    /// Pr(R = r), add-one smoothed over the relations present.
    pub fn total(&self) -> usize {
        self.relations.values().map(|s| s.n).sum()
    }

    pub fn prior(&self, r: Relation) -> Option<f64> {
        let stats = self.relations.get(&r)?;
        let total: usize = self.relations.values().map(|s| s.n + 1).sum();
        Some((stats.n + 1) as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationConfig {
    pub min_samples: usize,
    /// A pair fails if 1.96 sigma / sqrt(n) exceeds this fraction of the
    /// generic pair's sigma for the same relation and feature.
    pub ci_ratio: f64,
    pub sigma_floor: f64,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            min_samples: 10,
            ci_ratio: 0.5,
            sigma_floor: 1e-3,
        }
    }
}

/// One labelled training observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSample {
    pub chain1: Vec<String>,
    pub chain2: Vec<String>,
    pub relation: Relation,
    pub features: Features,
}

/// Relation scores for one query, in log space, with the class pair used.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationScores {
    /// log R(r) per relation in `Relation::ALL` order.
    pub log_r: [f64; 5],
    /// Class pair that scored each relation.
    pub pairs: [(String, String); 5],
    pub prior_pair: (String, String),
}

impl RelationScores {
    pub fn r(&self, rel: Relation) -> f64 {
        let l = self.log_r[rel.index()];
        if l <= R_FLOOR.ln() {
            R_FLOOR
        } else {
            l.exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationModel {
    pub config: RelationConfig,
    #[serde(with = "pair_list")]
    pairs: BTreeMap<(String, String), ClassedGaussians>,
}

/// JSON has no tuple keys, so class pairs are stored as a list.
mod pair_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ClassedGaussians;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        first: String,
        second: String,
        #[serde(flatten)]
        gaussians: ClassedGaussians,
    }

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(String, String), ClassedGaussians>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<Entry> = map
            .iter()
            .map(|((a, b), g)| Entry {
                first: a.clone(),
                second: b.clone(),
                gaussians: g.clone(),
            })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(String, String), ClassedGaussians>, D::Error> {
        let list = Vec::<Entry>::deserialize(d)?;
        Ok(list
            .into_iter()
            .map(|e| ((e.first, e.second), e.gaussians))
            .collect())
    }
}

impl RelationModel {
    pub fn from_pairs(
        config: RelationConfig,
        pairs: BTreeMap<(String, String), ClassedGaussians>,
    ) -> Result<Self> {
        let model = RelationModel { config, pairs };
        if model.generic().is_none_or(|g| g.relations.is_empty()) {
            return Err(Error::UntrainedRelations);
        }
        Ok(model)
    }

    /// Every sample contributes to every class pair along its two chains.
    pub fn train(samples: &[RelationSample], config: RelationConfig) -> Result<Self> {
        let mut buckets: BTreeMap<(String, String), BTreeMap<Relation, Vec<Features>>> =
            BTreeMap::new();
        for s in samples {
            for a in &s.chain1 {
                for b in &s.chain2 {
                    buckets
                        .entry((a.clone(), b.clone()))
                        .or_default()
                        .entry(s.relation)
                        .or_default()
                        .push(s.features);
                }
            }
        }
        let pairs = buckets
            .into_iter()
            .map(|(k, rels)| {
                let relations = rels
                    .into_iter()
                    .map(|(r, v)| (r, FeatureStats::from_samples(&v, config.sigma_floor)))
                    .collect();
                (k, ClassedGaussians { relations })
            })
            .collect();
        Self::from_pairs(config, pairs)
    }

    /// A model without data; every query fails with `UntrainedRelations`.
    pub fn untrained(config: RelationConfig) -> Self {
        RelationModel { config, pairs: BTreeMap::new() }
    }

    pub fn is_trained(&self) -> bool {
        self.generic().is_some_and(|g| !g.relations.is_empty())
    }

    pub fn pairs(&self) -> &BTreeMap<(String, String), ClassedGaussians> {
        &self.pairs
    }

    fn generic(&self) -> Option<&ClassedGaussians> {
        self.pairs.get(&(GEN.to_string(), GEN.to_string()))
    }

    /// Whether a pair's function for one relation is trustworthy enough to
    /// use: enough samples and a tight mean on every feature.
    fn usable(&self, pair: &ClassedGaussians, r: Relation, generic: &ClassedGaussians) -> bool {
        let (Some(s), Some(g)) = (pair.relations.get(&r), generic.relations.get(&r)) else {
            return false;
        };
        s.n >= self.config.min_samples
            && (0..FEATURES).all(|i| 1.96 * s.std[i] / (s.n as f64).sqrt() <= self.config.ci_ratio * g.std[i])
    }

    /// Class pair scoring relation `r` for a query: the most specific usable
    /// one, generalizing the second label first, then the first label,
    /// ending at (GEN, GEN).
    pub fn select_pair<'a>(
        &'a self,
        chain1: &'a [String],
        chain2: &'a [String],
        r: Relation,
    ) -> Result<(&'a str, &'a str, &'a ClassedGaussians)> {
        let generic = self.generic().ok_or(Error::UntrainedRelations)?;
        for a in chain1 {
            for b in chain2 {
                if a == GEN && b == GEN {
                    continue;
                }
                if let Some(p) = self.pairs.get(&(a.clone(), b.clone())) {
                    if self.usable(p, r, generic) {
                        return Ok((a, b, p));
                    }
                }
            }
        }
        Ok((GEN, GEN, generic))
    }

    /// Pair supplying Pr(R = r | classes): the most specific one with at
    /// least `min_samples` samples in total.
    pub fn prior_pair<'a>(&'a self, chain1: &'a [String], chain2: &'a [String]) -> Result<(&'a str, &'a str, &'a ClassedGaussians)> {
        let generic = self.generic().ok_or(Error::UntrainedRelations)?;
        for a in chain1 {
            for b in chain2 {
                if let Some(p) = self.pairs.get(&(a.clone(), b.clone())) {
                    if p.total() >= self.config.min_samples {
                        return Ok((a, b, p));
                    }
                }
            }
        }
        Ok((GEN, GEN, generic))
    }

    /// log R(r) = log Pr(r | classes) + sum of log Gaussian densities. The
    /// prior is add-one smoothed over the relations seen anywhere in training;
    /// each relation's densities come from its own selected pair.
    pub fn classify(&self, chain1: &[String], chain2: &[String], f: &Features) -> Result<RelationScores> {
        let generic = self.generic().ok_or(Error::UntrainedRelations)?;
        let (pa, pb, pp) = self.prior_pair(chain1, chain2)?;
        let denominator = (pp.total() + generic.relations.len()) as f64;
        let mut log_r = [R_FLOOR.ln(); 5];
        let mut pairs: [(String, String); 5] = Default::default();
        for r in Relation::ALL {
            let (a, b, p) = self.select_pair(chain1, chain2, r)?;
            if let Some(stats) = p.relations.get(&r) {
                let count = pp.relations.get(&r).map_or(0, |s| s.n);
                let prior = (count + 1) as f64 / denominator;
                log_r[r.index()] = (prior.ln() + stats.log_density(f)).max(R_FLOOR.ln());
            }
            pairs[r.index()] = (a.to_string(), b.to_string());
        }
        Ok(RelationScores {
            log_r,
            pairs,
            prior_pair: (pa.to_string(), pb.to_string()),
        })
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Relation-variable distribution: (Pr(NIL), Pr(r) in `Relation::ALL` order).
pub fn relation_distribution(log_r: &[f64; 5]) -> (f64, [f64; 5]) {
    let (log_nil, log_p) = log_relation_distribution(log_r);
    (log_nil.exp(), log_p.map(f64::exp))
}

/// Log-space version of [`relation_distribution`].
pub fn log_relation_distribution(log_r: &[f64; 5]) -> (f64, [f64; 5]) {
    let max = log_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = softplus(max);
    let log_total = max + log_r.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let log_mass = n.ln() - n.ln_1p();
    let log_nil = -n.ln_1p();
    (log_nil, log_r.map(|l| log_mass + l - log_total))
}
