//! Estimating every model component from an annotated corpus.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusItem;
use crate::error::{Error, Result};
use crate::grammar::Grammar;
use crate::ink::{min_stroke_distance, Observable, StrokeSet};
use crate::model::{Model, RecognizerConfig};
use crate::relations::{self, RelationConfig, RelationModel, RelationSample};
use crate::scoring::SymbolBag;
use crate::symbols::{MatcherProfile, QuantileMap, SymbolFeatures, SymbolModel, SymbolTemplate};
use crate::truth::TruthExpr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub templates_per_symbol: usize,
    /// Held-out instances per symbol used for quantiles and weights.
    pub probes_per_symbol: usize,
    pub weight_passes: usize,
    /// Floor on the grouping scale, as a fraction of the median symbol
    /// diagonal.
    pub lambda_floor: f64,
    pub relations: RelationConfig,
    pub recognizer: RecognizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            templates_per_symbol: 6,
            probes_per_symbol: 8,
            weight_passes: 2,
            lambda_floor: 0.01,
            relations: RelationConfig::default(),
            recognizer: RecognizerConfig::default(),
        }
    }
}

/// What training produced besides the model, for inspection.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub relation_samples: Vec<RelationSample>,
    pub probe_accuracy: f64,
    pub symbol_counts: BTreeMap<String, usize>,
}

fn strokes_of(obs: &Observable, set: StrokeSet) -> Vec<Vec<crate::ink::Point>> {
    set.iter().map(|i| obs.stroke(i).points.clone()).collect()
}

/// Largest pairwise stroke distance within a group; `None` for one stroke.
pub fn group_spread(obs: &Observable, set: StrokeSet) -> Option<f64> {
    let ids: Vec<usize> = set.iter().collect();
    let mut best: Option<f64> = None;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let d = min_stroke_distance(obs.stroke(a), obs.stroke(b));
            best = Some(best.map_or(d, |x| x.max(d)));
        }
    }
    best
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median spread of multi-stroke training symbols, floored at a fraction
/// of the median symbol diagonal.
pub fn estimate_lambda(corpus: &[CorpusItem], floor_fraction: f64) -> f64 {
    let mut spreads = Vec::new();
    let mut diagonals = Vec::new();
    for item in corpus {
        for g in item.groups() {
            let set = g.set();
            if let Ok(b) = item.observable.bbox(set) {
                diagonals.push(b.diagonal());
            }
            if let Some(s) = group_spread(&item.observable, set) {
                spreads.push(s);
            }
        }
    }
    let floor = floor_fraction * median(diagonals).unwrap_or(1.0);
    median(spreads).unwrap_or(floor).max(floor).max(1e-9)
}

/// Adjacent pairs of every concatenation in a truth tree.
pub fn relation_samples(g: &Grammar, obs: &Observable, expr: &TruthExpr) -> Vec<RelationSample> {
    let chain = |e: &TruthExpr| match e {
        TruthExpr::Symbol { symbol, .. } => {
            let class = g
                .terminal_id(symbol)
                .map(|t| g.terminal(t).class.clone())
                .unwrap_or_else(|| crate::grammar::default_class(symbol).to_string());
            relations::terminal_chain(symbol, &class)
        }
        TruthExpr::Concat { .. } => relations::expr_chain(),
    };
    let mut out = Vec::new();
    let mut stack = vec![expr];
    while let Some(e) = stack.pop() {
        if let TruthExpr::Concat { relation, children } = e {
            for w in children.windows(2) {
                out.push(RelationSample {
                    chain1: chain(&w[0]),
                    chain2: chain(&w[1]),
                    relation: *relation,
                    features: relations::relation_features(obs, w[0].set(), w[1].set()).expect("non-empty"),
                });
            }
            stack.extend(children.iter().rev());
        }
    }
    out
}

/// Top-1 accuracy of a profile over precomputed per-symbol distances.
fn accuracy(profile: &MatcherProfile, probes: &[(usize, Vec<[f64; 4]>)]) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let hits = probes
        .iter()
        .filter(|(truth, dists)| {
            let s: Vec<f64> = dists.iter().map(|d| profile.combine(d)).collect();
            let best = s.iter().copied().fold(f64::INFINITY, f64::min);
            s[*truth] == best && s.iter().filter(|&&v| v == best).count() == 1
        })
        .count();
    hits as f64 / probes.len() as f64
}

/// Coordinate descent over a 9-point grid per weight.
pub fn optimize_weights(mut profile: MatcherProfile, probes: &[(usize, Vec<[f64; 4]>)], passes: usize) -> MatcherProfile {
    let normalize = |w: [f64; 4]| {
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.map(|x| x / s)
        } else {
            [0.25; 4]
        }
    };
    let mut best = accuracy(&profile, probes);
    for _ in 0..passes {
        for i in 0..4 {
            for step in 0..9 {
                let mut w = profile.weights;
                w[i] = step as f64 / 8.0;
                let candidate = MatcherProfile { weights: normalize(w), ..profile.clone() };
                let a = accuracy(&candidate, probes);
                if a > best {
                    best = a;
                    profile = candidate;
                }
            }
        }
    }
    profile
}

pub fn train(g: &Grammar, corpus: &[CorpusItem], cfg: &TrainConfig) -> Result<(Model, TrainLog)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut log = TrainLog::default();
    let containers: Vec<&str> = g.terminals().iter().filter(|t| t.container).map(|t| t.name.as_str()).collect();

    // templates first, then held-out probes, in corpus order
    let mut templates = Vec::new();
    let mut probes: Vec<(String, SymbolFeatures)> = Vec::new();
    for item in corpus {
        for grp in item.groups() {
            let n = log.symbol_counts.entry(grp.symbol.clone()).or_default();
            let strokes = strokes_of(&item.observable, grp.set());
            if *n < cfg.templates_per_symbol {
                templates.push(SymbolTemplate::new(grp.symbol.clone(), &strokes));
            } else if *n < cfg.templates_per_symbol + cfg.probes_per_symbol {
                probes.push((grp.symbol.clone(), SymbolFeatures::extract(&strokes)));
            }
            *n += 1;
        }
    }
    let lambda = estimate_lambda(corpus, cfg.lambda_floor);
    let library = SymbolModel::new(templates.clone(), MatcherProfile::default(), lambda, &containers)?;
    let dists: Vec<(usize, Vec<[f64; 4]>)> = probes
        .par_iter()
        .map(|(sym, f)| (library.symbol_index(sym).expect("probe symbols have templates"), library.matcher_distances(f)))
        .collect();
    let mut samples: [Vec<f64>; 4] = Default::default();
    for (_, per_symbol) in &dists {
        for d in per_symbol {
            for m in 0..4 {
                samples[m].push(d[m]);
            }
        }
    }
    let quantiles = samples.map(|s| QuantileMap::fit(&s));
    let profile = optimize_weights(MatcherProfile { quantiles, weights: [0.25; 4] }, &dists, cfg.weight_passes);
    log.probe_accuracy = accuracy(&profile, &dists);
    let symbols = SymbolModel::new(templates, profile, lambda, &containers)?;

    for item in corpus {
        if let Some(e) = item.expr() {
            log.relation_samples.extend(relation_samples(g, &item.observable, e));
        }
    }
    let relations = if log.relation_samples.is_empty() {
        RelationModel::untrained(cfg.relations.clone())
    } else {
        RelationModel::train(&log.relation_samples, cfg.relations.clone())?
    };

    let mut bag = SymbolBag::new();
    for item in corpus {
        let names: Vec<&str> = item.groups().iter().map(|g| g.symbol.as_str()).collect();
        bag.count_expression(&names);
    }
    Ok((Model::new(g.clone(), symbols, relations, bag, cfg.recognizer.clone()), log))
}
