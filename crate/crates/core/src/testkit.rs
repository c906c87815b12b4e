//! Shared fixtures for unit tests.

use std::sync::OnceLock;

use crate::corpus::CorpusItem;
use crate::glyphs;
use crate::grammar::Grammar;
use crate::ink::Point;
use crate::model::{Model, RecognizerConfig};
use crate::relations::{RelationConfig, RelationModel};
use crate::scoring::SymbolBag;
use crate::symbols::{MatcherProfile, SymbolModel, SymbolTemplate};
use crate::synth::{synth_corpus, GlyphSet, SynthConfig};
use crate::train::{train, TrainConfig};

/// A model trained once on a clean-ish synthetic corpus.
pub fn synth_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        let corpus = training_corpus();
        train(&Grammar::crohme_like(), &corpus, &TrainConfig::default()).unwrap().0
    })
}

pub fn training_corpus() -> Vec<CorpusItem> {
    synth(200, 0.03, 21)
}

pub fn synth(count: usize, noise: f64, seed: u64) -> Vec<CorpusItem> {
    let cfg = SynthConfig { count, noise, seed, ..Default::default() };
    synth_corpus(&Grammar::crohme_like(), &GlyphSet::builtin(), &cfg).unwrap()
}

/// The toy grammar with one builtin glyph template per available terminal
/// and no relation training.
pub fn toy_model() -> Model {
    let g = Grammar::toy();
    let templates: Vec<SymbolTemplate> = g
        .terminals()
        .iter()
        .filter_map(|t| glyphs::glyph(&t.name).map(|s| SymbolTemplate::new(t.name.clone(), &s)))
        .collect();
    let symbols = SymbolModel::new(templates, MatcherProfile::default(), 0.1, &[]).unwrap();
    let mut bag = SymbolBag::new();
    let names: Vec<&str> = g.terminals().iter().map(|t| t.name.as_str()).collect();
    bag.count_expression(&names);
    Model::new(g, symbols, RelationModel::untrained(RelationConfig::default()), bag, RecognizerConfig::default())
}

const FIG3_GRAMMAR: &str = "start EXPR
terminals + - a x p P 2
EXPR -> ADD | TERM
ADD -> (right) TERM + EXPR
TERM -> MULT | LEAD-TERM
LEAD-TERM -> SUP | FRAC | SYM
MULT -> (right) LEAD-TERM TERM
FRAC -> (below) EXPR - EXPR
SUP -> (super) SYM EXPR
SYM -> a | x | p | P | 2
";

/// A small grammar where `p` and `P` are easily confused, trained once.
pub fn fig3_model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(|| {
        let g = Grammar::parse(FIG3_GRAMMAR).unwrap();
        let cfg = SynthConfig { count: 300, noise: 0.03, seed: 3, ..Default::default() };
        let corpus = synth_corpus(&g, &GlyphSet::builtin(), &cfg).unwrap();
        train(&g, &corpus, &TrainConfig::default()).unwrap().0
    })
}

/// A builtin glyph scaled by `s` with its box corner at (dx, dy).
pub fn place(name: &str, dx: f64, dy: f64, s: f64) -> Vec<Vec<Point>> {
    glyphs::glyph(name)
        .unwrap()
        .into_iter()
        .map(|st| st.into_iter().map(|p| Point::new(dx + s * p.x, dy + s * p.y)).collect())
        .collect()
}

/// A `p` followed by a smaller `x+a` sitting on its baseline: reads as
/// px+a but P^{x+a} is among the alternates.
pub fn p_x_plus_a() -> Vec<(&'static str, Vec<Vec<Point>>)> {
    let s = 0.7;
    let mut out = vec![("p", place("p", 0.0, 0.0, 1.0))];
    for (i, n) in ["x", "+", "a"].into_iter().enumerate() {
        out.push((n, place(n, 0.5 + 0.65 * s * i as f64, 1.0 - s, s)));
    }
    out
}
