//! Symbol recognition and stroke grouping.

pub mod grouping;
pub mod matchers;
pub mod quantile;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ink::{Observable, Point, StrokeSet};
pub use grouping::{grouping_score, GroupFeatures, GroupingContext};
pub use matchers::{Matcher, SymbolFeatures};
pub use quantile::QuantileMap;

/// Floor on the combined quantile score before inversion, so S <= 1e8.
pub const MIN_COMBINED: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTemplate {
    pub symbol: String,
    pub features: SymbolFeatures,
}

impl SymbolTemplate {
    pub fn new(symbol: impl Into<String>, strokes: &[Vec<Point>]) -> Self {
        SymbolTemplate {
            symbol: symbol.into(),
            features: SymbolFeatures::extract(strokes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherProfile {
    pub quantiles: [QuantileMap; 4],
    pub weights: [f64; 4],
}

impl Default for MatcherProfile {
    fn default() -> Self {
        MatcherProfile {
            quantiles: Default::default(),
            weights: [0.25; 4],
        }
    }
}

impl MatcherProfile {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("matcher weights {:?} must be >= 0 and sum to 1", self.weights)));
        }
        for q in &self.quantiles {
            QuantileMap::from_knots(q.knots().to_vec())?;
        }
        Ok(())
    }

    /// s = sum_i w_i Q_i(d_i), floored.
    pub fn combine(&self, d: &[f64; 4]) -> f64 {
        let s: f64 = (0..4).map(|i| self.weights[i] * self.quantiles[i].eval(d[i])).sum();
        s.max(MIN_COMBINED)
    }
}

/// Scores of one stroke subset: S(alpha, o) per library symbol plus G(o).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolScores {
    pub grouping: f64,
    pub scores: Vec<f64>,
}

/// A template library with its matcher profile and grouping scale.
#[derive(Debug, Clone)]
pub struct SymbolModel {
    templates: Vec<SymbolTemplate>,
    profile: MatcherProfile,
    lambda: f64,
    symbols: Vec<String>,
    by_symbol: Vec<Vec<usize>>,
    container: Vec<bool>,
    max_strokes: usize,
}

impl SymbolModel {
    /// `containers` names the symbols that can enclose others.
    pub fn new(
        templates: Vec<SymbolTemplate>,
        profile: MatcherProfile,
        lambda: f64,
        containers: &[&str],
    ) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::UntrainedSymbols);
        }
        profile.validate()?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Model(format!("grouping scale {lambda} must be positive")));
        }
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in templates.iter().enumerate() {
            groups.entry(t.symbol.clone()).or_default().push(i);
        }
        let symbols: Vec<String> = groups.keys().cloned().collect();
        let container = symbols.iter().map(|s| containers.contains(&s.as_str())).collect();
        let max_strokes = templates.iter().map(|t| t.features.stroke_count).max().unwrap();
        Ok(SymbolModel {
            by_symbol: groups.into_values().collect(),
            templates,
            profile,
            lambda,
            symbols,
            container,
            max_strokes,
        })
    }

    pub fn templates(&self) -> &[SymbolTemplate] {
        &self.templates
    }

    pub fn profile(&self) -> &MatcherProfile {
        &self.profile
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Library symbols in sorted order; score vectors follow this order.
    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    pub fn is_container(&self, symbol: usize) -> bool {
        self.container[symbol]
    }

    /// Most strokes in any template; larger subsets are never a symbol.
    pub fn max_strokes(&self) -> usize {
        self.max_strokes
    }

    /// Per symbol, the per-matcher mean of the two smallest template distances.
    pub fn matcher_distances(&self, probe: &SymbolFeatures) -> Vec<[f64; 4]> {
        self.by_symbol
            .iter()
            .map(|members| {
                let mut out = [0.0; 4];
                for m in Matcher::ALL {
                    let (mut a, mut b) = (f64::INFINITY, f64::INFINITY);
                    for &t in members {
                        let d = probe.distance(&self.templates[t].features, m);
                        if d < a {
                            b = a;
                            a = d;
                        } else if d < b {
                            b = d;
                        }
                    }
                    out[m.index()] = if members.len() == 1 { a } else { 0.5 * (a + b) };
                }
                out
            })
            .collect()
    }

    /// S(alpha, o) = s_alpha^-2 for every library symbol.
    pub fn scores_for(&self, probe: &SymbolFeatures) -> Vec<f64> {
        self.matcher_distances(probe)
            .iter()
            .map(|d| self.profile.combine(d).powi(-2))
            .collect()
    }

    /// C(s): the probability mass the symbol variable (with G = 1) puts on
    /// container symbols.
    pub fn container_resemblance(&self, probe: &SymbolFeatures) -> f64 {
        if !self.container.iter().any(|&c| c) {
            return 0.0;
        }
        let s = self.scores_for(probe);
        let max = s.iter().copied().fold(0.0, f64::max);
        let n = max.ln_1p();
        let total: f64 = s.iter().sum();
        let cont: f64 = s.iter().zip(&self.container).filter(|(_, &c)| c).map(|(v, _)| v).sum();
        (n / (n + 1.0) * cont / total).clamp(0.0, 1.0)
    }

    /// Grouping context for a whole input.
    pub fn grouping_context(&self, obs: &Observable) -> GroupingContext {
        let c = (0..obs.len())
            .map(|i| {
                let f = SymbolFeatures::extract(&[obs.stroke(i).points.clone()]);
                self.container_resemblance(&f)
            })
            .collect();
        GroupingContext::new(obs, c)
    }

    pub fn subset_features(obs: &Observable, set: StrokeSet) -> SymbolFeatures {
        let strokes: Vec<Vec<Point>> = set.iter().map(|i| obs.stroke(i).points.clone()).collect();
        SymbolFeatures::extract(&strokes)
    }

    pub fn symbol_score(&self, obs: &Observable, set: StrokeSet, ctx: &GroupingContext) -> Result<SymbolScores> {
        if set.is_empty() {
            return Err(Error::EmptySubset);
        }
        let f = ctx.features(set);
        Ok(SymbolScores {
            grouping: grouping_score(&f, self.lambda, grouping::ALPHA, grouping::BETA),
            scores: self.scores_for(&Self::subset_features(obs, set)),
        })
    }
}
