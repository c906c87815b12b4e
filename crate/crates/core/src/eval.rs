//! Accuracy evaluation: top-1 metrics and correction counting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusItem;
use crate::error::{Error, Result};
use crate::extract::Constraint;
use crate::grammar::{Grammar, Relation};
use crate::ink::StrokeSet;
use crate::model::Model;
use crate::recognize::{subtree_at, Pipeline};
use crate::scoring::input::ScoringMode;
use crate::scoring::{ParseTree, TreeKind};
use crate::truth::TruthExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Default,
    /// Terminal admissions pinned to the true symbol groups.
    Perfect,
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Scenario::Default),
            "perfect" => Ok(Scenario::Perfect),
            _ => Err(format!("unknown scenario {s:?} (expected default or perfect)")),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Default => "default",
            Scenario::Perfect => "perfect",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "class")]
pub enum Outcome {
    Correct,
    Attainable { symbol: usize, structural: usize },
    Incorrect,
}

/// Why a top-1 tree was wrong, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    NoParse,
    Grouping,
    Symbol,
    Structure,
}

impl Failure {
    pub fn name(self) -> &'static str {
        match self {
            Failure::NoParse => "no-parse",
            Failure::Grouping => "grouping",
            Failure::Symbol => "symbol",
            Failure::Structure => "structure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemResult {
    pub name: String,
    pub truth: String,
    pub top: Option<String>,
    pub strokes: usize,
    pub strokes_correct: usize,
    pub symbols: usize,
    pub symbols_segmented: usize,
    pub symbols_recognized: usize,
    pub expression_correct: bool,
    pub outcome: Outcome,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub stroke_reco: f64,
    pub symbol_seg: f64,
    /// Out of correctly segmented symbols.
    pub symbol_reco: f64,
    pub expression_reco: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub k_max: usize,
    pub metrics: Metrics,
    pub correct: usize,
    pub attainable: usize,
    pub incorrect: usize,
    pub symbol_corrections: usize,
    pub structural_corrections: usize,
    /// Top-1 failure causes over every non-correct item.
    pub failures: BTreeMap<Failure, usize>,
    pub items: Vec<ItemResult>,
}

impl EvalReport {
    pub fn summary(&self) -> String {
        let m = &self.metrics;
        let n = self.items.len().max(1) as f64;
        let pct = |c: usize| 100.0 * c as f64 / n;
        let per = |c: usize| c as f64 / self.attainable.max(1) as f64;
        let mut out = format!(
            "scenario {}: {} items\n  stroke reco {:.2}%  symbol seg {:.2}%  symbol reco {:.2}%  expression reco {:.2}%\n  correct {} ({:.2}%)  attainable {} ({:.2}%)  incorrect {} ({:.2}%)\n  corrections: {} symbol, {} structural ({:.2} / {:.2} per attainable item)\n",
            self.scenario,
            self.items.len(),
            m.stroke_reco,
            m.symbol_seg,
            m.symbol_reco,
            m.expression_reco,
            self.correct,
            pct(self.correct),
            self.attainable,
            pct(self.attainable),
            self.incorrect,
            pct(self.incorrect),
            self.symbol_corrections,
            self.structural_corrections,
            per(self.symbol_corrections),
            per(self.structural_corrections),
        );
        if !self.failures.is_empty() {
            let parts: Vec<String> = self.failures.iter().map(|(f, c)| format!("{} {c}", f.name())).collect();
            out.push_str(&format!("  not correct by cause: {}\n", parts.join(", ")));
        }
        out
    }
}

/// Truth with each symbol's strokes sorted.
pub fn normalized(e: &TruthExpr) -> TruthExpr {
    match e {
        TruthExpr::Symbol { symbol, strokes } => {
            let mut strokes = strokes.clone();
            strokes.sort_unstable();
            TruthExpr::Symbol { symbol: symbol.clone(), strokes }
        }
        TruthExpr::Concat { relation, children } => TruthExpr::Concat {
            relation: *relation,
            children: children.iter().map(normalized).collect(),
        },
    }
}

/// A parse tree as a stroke-annotated expression.
pub fn annotate(t: &ParseTree, g: &Grammar) -> TruthExpr {
    let t = t.core();
    match &t.kind {
        TreeKind::Terminal { terminal, .. } => TruthExpr::Symbol {
            symbol: g.terminal_name(*terminal).to_string(),
            strokes: t.subset.iter().collect(),
        },
        TreeKind::Concat { relation, children, .. } => TruthExpr::Concat {
            relation: *relation,
            children: children.iter().map(|c| annotate(c, g)).collect(),
        },
        TreeKind::Unit { .. } => unreachable!(),
    }
}

/// One level of a reading: a symbol over its strokes, or a relation with
/// the stroke sets of its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Shallow {
    Symbol(String, StrokeSet),
    Concat(Relation, Vec<StrokeSet>),
}

fn shallow_truth(e: &TruthExpr) -> Shallow {
    match e {
        TruthExpr::Symbol { symbol, .. } => Shallow::Symbol(symbol.clone(), e.set()),
        TruthExpr::Concat { relation, children } => {
            Shallow::Concat(*relation, children.iter().map(|c| c.set()).collect())
        }
    }
}

fn shallow_tree(t: &ParseTree, g: &Grammar) -> Shallow {
    let t = t.core();
    match &t.kind {
        TreeKind::Terminal { terminal, .. } => Shallow::Symbol(g.terminal_name(*terminal).to_string(), t.subset),
        TreeKind::Concat { relation, children, .. } => {
            Shallow::Concat(*relation, children.iter().map(|c| c.subset).collect())
        }
        TreeKind::Unit { .. } => unreachable!(),
    }
}

type Leaf = (String, StrokeSet, Vec<(Relation, usize)>);

fn leaves(e: &TruthExpr, path: &mut Vec<(Relation, usize)>, out: &mut Vec<Leaf>) {
    match e {
        TruthExpr::Symbol { symbol, .. } => out.push((symbol.clone(), e.set(), path.clone())),
        TruthExpr::Concat { relation, children } => {
            for (i, c) in children.iter().enumerate() {
                path.push((*relation, i));
                leaves(c, path, out);
                path.pop();
            }
        }
    }
}

fn leaf_list(e: &TruthExpr) -> Vec<Leaf> {
    let mut out = Vec::new();
    leaves(e, &mut Vec::new(), &mut out);
    out
}

/// Per-item counts behind the four accuracy metrics.
fn score_item(truth: &TruthExpr, top: Option<&TruthExpr>, strokes: usize) -> (usize, usize, usize, bool) {
    let Some(top) = top else {
        return (0, 0, 0, false);
    };
    let want = leaf_list(truth);
    let got = leaf_list(top);
    let strokes_correct = (0..strokes)
        .filter(|&i| {
            let w = want.iter().find(|l| l.1.contains(i));
            let g = got.iter().find(|l| l.1.contains(i));
            matches!((w, g), (Some(w), Some(g)) if w == g)
        })
        .count();
    let mut segmented = 0;
    let mut recognized = 0;
    for (sym, set, _) in &want {
        if let Some(g) = got.iter().find(|l| l.1 == *set) {
            segmented += 1;
            if g.0 == *sym {
                recognized += 1;
            }
        }
    }
    (strokes_correct, segmented, recognized, normalized(truth) == *top)
}

fn failure(truth: &TruthExpr, top: Option<&TruthExpr>) -> Failure {
    let Some(top) = top else {
        return Failure::NoParse;
    };
    let mut want: Vec<(StrokeSet, String)> = leaf_list(truth).into_iter().map(|l| (l.1, l.0)).collect();
    let mut got: Vec<(StrokeSet, String)> = leaf_list(top).into_iter().map(|l| (l.1, l.0)).collect();
    want.sort();
    got.sort();
    let sets = |v: &[(StrokeSet, String)]| v.iter().map(|l| l.0).collect::<Vec<_>>();
    if sets(&want) != sets(&got) {
        Failure::Grouping
    } else if want != got {
        Failure::Symbol
    } else {
        Failure::Structure
    }
}

/// Simulates the correction workflow against the truth tree. Returns
/// (symbol, structural) corrections, or `None` if some needed reading never
/// appears among the first `k_max` alternates.
pub fn count_corrections(p: &mut Pipeline<'_>, truth: &TruthExpr, k_max: usize) -> Option<(usize, usize)> {
    let g = &p.model().grammar;
    let want = normalized(truth);
    let mut locks: Vec<Constraint> = Vec::new();
    let mut counts = (0, 0);
    let mut current = p.top_with(1, &locks).pop()?.tree;
    // every pass either fixes the tree or adds a lock; a locked node never
    // needs correcting again, so passes are bounded by the truth size
    loop {
        if annotate(&current, g) == want {
            return Some(counts);
        }
        let before = locks.len();
        let mut stack = vec![&want];
        while let Some(n) = stack.pop() {
            let at = subtree_at(&current, n.set());
            if at.is_some_and(|t| annotate(t, g) == *n) {
                continue;
            }
            let target = shallow_truth(n);
            if !at.is_some_and(|t| shallow_tree(t, g) == target) {
                let alts = p.alternates(n.set(), Some(&current), k_max, &locks).ok()?;
                alts.iter().find(|a| shallow_tree(&a.tree, g) == target)?;
                match n {
                    TruthExpr::Symbol { .. } => counts.0 += 1,
                    TruthExpr::Concat { .. } => counts.1 += 1,
                }
                let (grammar, target) = (g.clone(), target.clone());
                locks.push(Constraint {
                    subset: n.set(),
                    accept: Arc::new(move |t: &ParseTree| shallow_tree(t, &grammar) == target),
                });
                current = p.top_with(1, &locks).pop()?.tree;
            }
            if let TruthExpr::Concat { children, .. } = n {
                stack.extend(children.iter().rev());
            }
        }
        if locks.len() == before && annotate(&current, g) != want {
            return None;
        }
    }
}

fn evaluate_item(model: &Model, item: &CorpusItem, scenario: Scenario, k_max: usize) -> Result<ItemResult> {
    let truth = item
        .expr()
        .ok_or_else(|| Error::Model(format!("{} has no expression tree", item.name)))?;
    let mode = match scenario {
        Scenario::Default => ScoringMode::Default,
        Scenario::Perfect => ScoringMode::Perfect(item.groups().to_vec()),
    };
    let mut p = Pipeline::build(model, &item.observable, mode)?;
    let top = p.top(1).pop();
    let top_expr = top.as_ref().map(|t| annotate(&t.tree, &model.grammar));
    let (strokes_correct, segmented, recognized, exact) =
        score_item(truth, top_expr.as_ref(), item.observable.len());
    let outcome = if exact {
        Outcome::Correct
    } else {
        match top.as_ref().and_then(|_| count_corrections(&mut p, truth, k_max)) {
            Some((symbol, structural)) => Outcome::Attainable { symbol, structural },
            None => Outcome::Incorrect,
        }
    };
    Ok(ItemResult {
        name: item.name.clone(),
        truth: truth.expression().to_latex(),
        top: top.map(|t| t.expression.to_latex()),
        strokes: item.observable.len(),
        strokes_correct,
        symbols: item.groups().len(),
        symbols_segmented: segmented,
        symbols_recognized: recognized,
        expression_correct: exact,
        outcome,
        failure: (!exact).then(|| failure(truth, top_expr.as_ref())),
    })
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Evaluates every item in parallel. Items that cannot be parsed at all
/// count as wrong; model errors abort.
pub fn evaluate(model: &Model, corpus: &[CorpusItem], scenario: Scenario, k_max: usize) -> Result<EvalReport> {
    let items = corpus
        .par_iter()
        .map(|item| match evaluate_item(model, item, scenario, k_max) {
            Err(Error::ComplexityLimit { .. }) => Ok(ItemResult {
                name: item.name.clone(),
                truth: item.expr().map(|e| e.expression().to_latex()).unwrap_or_default(),
                top: None,
                strokes: item.observable.len(),
                strokes_correct: 0,
                symbols: item.groups().len(),
                symbols_segmented: 0,
                symbols_recognized: 0,
                expression_correct: false,
                outcome: Outcome::Incorrect,
                failure: Some(Failure::NoParse),
            }),
            r => r,
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = |f: fn(&ItemResult) -> usize| items.iter().map(f).sum::<usize>();
    let metrics = Metrics {
        stroke_reco: percent(sum(|i| i.strokes_correct), sum(|i| i.strokes)),
        symbol_seg: percent(sum(|i| i.symbols_segmented), sum(|i| i.symbols)),
        symbol_reco: percent(sum(|i| i.symbols_recognized), sum(|i| i.symbols_segmented)),
        expression_reco: percent(sum(|i| i.expression_correct as usize), items.len()),
    };
    let mut report = EvalReport {
        scenario,
        k_max,
        metrics,
        correct: 0,
        attainable: 0,
        incorrect: 0,
        symbol_corrections: 0,
        structural_corrections: 0,
        failures: BTreeMap::new(),
        items: Vec::new(),
    };
    for i in &items {
        match i.outcome {
            Outcome::Correct => report.correct += 1,
            Outcome::Attainable { symbol, structural } => {
                report.attainable += 1;
                report.symbol_corrections += symbol;
                report.structural_corrections += structural;
            }
            Outcome::Incorrect => report.incorrect += 1,
        }
        if let Some(f) = i.failure {
            *report.failures.entry(f).or_default() += 1;
        }
    }
    report.items = items;
    Ok(report)
}
