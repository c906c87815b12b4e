//! One input through the whole pipeline: admission, forest, bag, extraction.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extract::{Constraint, Extractor};
use crate::forest::{Forest, NodeId};
use crate::grammar::{Expression, Grammar, NonterminalId};
use crate::ink::{Observable, StrokeSet};
use crate::model::Model;
use crate::scoring::input::{InputScorer, ScoringMode};
use crate::scoring::{ParseTree, TreeKind};

/// An extracted tree with its rendered expression.
#[derive(Debug, Clone)]
pub struct RankedTree {
    pub tree: Arc<ParseTree>,
    pub expression: Expression,
    pub score: f64,
}

impl RankedTree {
    pub fn new(tree: Arc<ParseTree>, g: &Grammar) -> Self {
        RankedTree {
            expression: tree.expression(g),
            score: tree.score,
            tree,
        }
    }

    pub fn summary(&self) -> TreeSummary {
        TreeSummary {
            latex: self.expression.to_latex(),
            expression: self.expression.clone(),
            score: self.score,
            strokes: self.tree.subset.iter().map(|i| i as u64).collect(),
        }
    }
}

/// Serializable view of a ranked tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeSummary {
    pub latex: String,
    pub expression: Expression,
    pub score: f64,
    pub strokes: Vec<u64>,
}

/// A built forest plus the scorer that admitted its leaves.
pub struct Pipeline<'m> {
    model: &'m Model,
    obs: &'m Observable,
    mode: ScoringMode,
    forest: Forest,
    scorer: Option<InputScorer<'m>>,
}

impl<'m> Pipeline<'m> {
    pub fn build(model: &'m Model, obs: &'m Observable, mode: ScoringMode) -> Result<Self> {
        let mut scorer = Self::scorer(model, obs, mode.clone());
        let forest = Forest::build(obs, &model.grammar, &mut scorer, &model.config.forest)?;
        if forest.stats().and_nodes > 0 && !model.relations.is_trained() {
            return Err(Error::UntrainedRelations);
        }
        scorer.freeze_bag(&forest);
        Ok(Pipeline {
            model,
            obs,
            mode,
            forest,
            scorer: Some(scorer),
        })
    }

    fn scorer(model: &'m Model, obs: &'m Observable, mode: ScoringMode) -> InputScorer<'m> {
        InputScorer::new(
            &model.grammar,
            &model.symbols,
            &model.relations,
            &model.bag,
            obs,
            model.config.admission.clone(),
            mode,
        )
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    fn take_scorer(&mut self) -> InputScorer<'m> {
        self.scorer.take().unwrap_or_else(|| {
            let mut s = Self::scorer(self.model, self.obs, self.mode.clone());
            s.freeze_bag(&self.forest);
            s
        })
    }

    /// Runs `f` on an extraction honoring `constraints`; scorer caches
    /// survive across runs.
    pub fn with_extractor<R>(
        &mut self,
        constraints: &[Constraint],
        f: impl FnOnce(&mut Extractor<'_, InputScorer<'m>>) -> R,
    ) -> R {
        let scorer = self.take_scorer();
        let mut x = Extractor::new(&self.forest, &self.model.grammar, scorer)
            .with_constraints(constraints.to_vec(), self.model.config.lock_search);
        let r = f(&mut x);
        self.scorer = Some(x.into_scorer());
        r
    }

    /// Best `k` whole-input trees.
    pub fn top(&mut self, k: usize) -> Vec<RankedTree> {
        self.top_with(k, &[])
    }

    pub fn top_with(&mut self, k: usize, constraints: &[Constraint]) -> Vec<RankedTree> {
        let Some(root) = self.forest.root() else {
            return Vec::new();
        };
        let g = &self.model.grammar;
        let trees = self.with_extractor(constraints, |x| x.top(root, k));
        trees.into_iter().map(|t| RankedTree::new(t, g)).collect()
    }

    /// The node whose trees serve as alternates for `subset`: the slot the
    /// current tree fills there, else the best-scoring node over it.
    pub fn covering_node(&mut self, subset: StrokeSet, current: Option<&ParseTree>, constraints: &[Constraint]) -> Option<NodeId> {
        let g = &self.model.grammar;
        if let Some(t) = current.and_then(|t| subtree_at(t, subset)) {
            if let Some(n) = self.forest.find(t.lhs(g), subset) {
                return Some(n);
            }
        }
        let candidates: Vec<(NodeId, bool, bool)> = (0..g.nonterminals().len())
            .filter_map(|i| {
                let nt = NonterminalId(i as u16);
                let hidden = g.nonterminals()[i].hidden;
                self.forest.find(nt, subset).map(|n| (n, hidden, nt != g.start()))
            })
            .collect();
        let scored: Vec<(NodeId, bool, bool, f64)> = self.with_extractor(constraints, |x| {
            candidates
                .iter()
                .filter_map(|&(n, hidden, not_start)| x.top(n, 1).first().map(|t| (n, hidden, not_start, t.score)))
                .collect()
        });
        scored
            .into_iter()
            .min_by(|a, b| (a.1, b.3, a.2, a.0).partial_cmp(&(b.1, a.3, b.2, b.0)).unwrap())
            .map(|c| c.0)
    }

    /// Up to `k` distinct readings of `subset`, best first.
    pub fn alternates(
        &mut self,
        subset: StrokeSet,
        current: Option<&ParseTree>,
        k: usize,
        constraints: &[Constraint],
    ) -> Result<Vec<RankedTree>> {
        let node = self.covering_node(subset, current, constraints).ok_or(Error::NoInterpretation)?;
        let g = &self.model.grammar;
        let out = self.with_extractor(constraints, |x| {
            let mut cur = x.cursor(node);
            let mut out: Vec<RankedTree> = Vec::new();
            while out.len() < k {
                let Some(t) = x.next(&mut cur) else { break };
                let r = RankedTree::new(t, g);
                if !out.iter().any(|o| o.expression == r.expression) {
                    out.push(r);
                }
            }
            out
        });
        if out.is_empty() {
            return Err(Error::NoInterpretation);
        }
        Ok(out)
    }
}

/// The outermost node of `t` spanning exactly `subset`.
pub fn subtree_at(t: &ParseTree, subset: StrokeSet) -> Option<&ParseTree> {
    if t.subset == subset {
        return Some(t);
    }
    if !subset.is_subset_of(t.subset) {
        return None;
    }
    match &t.kind {
        TreeKind::Terminal { .. } => None,
        TreeKind::Unit { child, .. } => subtree_at(child, subset),
        TreeKind::Concat { children, .. } => children.iter().find_map(|c| subtree_at(c, subset)),
    }
}

/// Best `k` interpretations of an input under the default scenario.
pub fn recognize(model: &Model, obs: &Observable, k: usize) -> Result<Vec<RankedTree>> {
    Pipeline::build(model, obs, ScoringMode::Default).map(|mut p| p.top(k))
}
