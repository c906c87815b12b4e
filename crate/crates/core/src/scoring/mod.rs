//! Parse trees and their scores.

pub mod bag;
pub mod input;

use std::fmt::Write as _;
use std::sync::Arc;

use crate::grammar::{Expression, Grammar, NonterminalId, ProductionId, Relation, TerminalId};
use crate::ink::StrokeSet;
pub use bag::SymbolBag;
pub use input::{InputScorer, ScoringMode};

/// What the relation model sees of a subexpression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassKey {
    Terminal(TerminalId),
    Expr,
}

/// Log factors of a terminal reading: symbol variable ratio and bag prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalFactor {
    pub symbol: f64,
    pub bag: f64,
}

impl TerminalFactor {
    pub fn total(&self) -> f64 {
        self.symbol + self.bag
    }
}

/// The per-input factors a tree score is built from.
pub trait TreeScorer {
    fn terminal(&mut self, t: TerminalId, o: StrokeSet) -> TerminalFactor;
    /// log Pr(R = rel | classes) - log Pr(R = NIL | GEN, GEN).
    fn relation(&mut self, rel: Relation, o1: StrokeSet, c1: ClassKey, o2: StrokeSet, c2: ClassKey) -> f64;
}

/// Score of a concatenation: children in order, then the relation terms.
/// Every score in the crate is composed through this function so equal
/// trees get bit-identical scores.
pub fn concat_score(children: &[f64], relation_sum: f64) -> f64 {
    children.iter().fold(0.0, |a, s| a + s) + relation_sum
}

/// Sum of the adjacent-pair relation factors.
pub fn relation_sum<S: TreeScorer + ?Sized>(
    scorer: &mut S,
    rel: Relation,
    parts: &[(StrokeSet, ClassKey)],
) -> f64 {
    parts
        .windows(2)
        .fold(0.0, |a, w| a + scorer.relation(rel, w[0].0, w[0].1, w[1].0, w[1].1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeKind {
    Terminal {
        terminal: TerminalId,
        production: ProductionId,
    },
    Unit {
        production: ProductionId,
        child: Arc<ParseTree>,
    },
    Concat {
        production: ProductionId,
        relation: Relation,
        children: Vec<Arc<ParseTree>>,
    },
}

/// One derivation of a nonterminal over a stroke subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    pub subset: StrokeSet,
    pub score: f64,
    pub kind: TreeKind,
}

impl ParseTree {
    pub fn production(&self) -> ProductionId {
        match &self.kind {
            TreeKind::Terminal { production, .. }
            | TreeKind::Unit { production, .. }
            | TreeKind::Concat { production, .. } => *production,
        }
    }

    pub fn lhs(&self, g: &Grammar) -> NonterminalId {
        g.production(self.production()).lhs
    }

    pub fn class(&self) -> ClassKey {
        match &self.kind {
            TreeKind::Terminal { terminal, .. } => ClassKey::Terminal(*terminal),
            TreeKind::Unit { child, .. } => child.class(),
            TreeKind::Concat { .. } => ClassKey::Expr,
        }
    }

    /// Skips unit productions.
    pub fn core(&self) -> &ParseTree {
        match &self.kind {
            TreeKind::Unit { child, .. } => child.core(),
            _ => self,
        }
    }

    pub fn expression(&self, g: &Grammar) -> Expression {
        match &self.core().kind {
            TreeKind::Terminal { terminal, .. } => Expression::terminal(g.terminal_name(*terminal)),
            TreeKind::Concat { relation, children, .. } => {
                Expression::concat(*relation, children.iter().map(|c| c.expression(g)).collect())
            }
            TreeKind::Unit { .. } => unreachable!(),
        }
    }

    /// Terminal leaves in left-to-right order with their subsets.
    pub fn leaves(&self) -> Vec<(TerminalId, StrokeSet)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(TerminalId, StrokeSet)>) {
        match &self.core().kind {
            TreeKind::Terminal { terminal, .. } => out.push((*terminal, self.subset)),
            TreeKind::Concat { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
            TreeKind::Unit { .. } => unreachable!(),
        }
    }

    /// Nested subsets, e.g. `{0,1}[{0} {1}]`.
    pub fn partition_shape(&self) -> String {
        let mut s = self.subset.to_string();
        if let TreeKind::Concat { children, .. } = &self.core().kind {
            s.push('[');
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                s.push_str(&c.partition_shape());
            }
            s.push(']');
        }
        s
    }

    /// Production ids in pre-order.
    pub fn derivation(&self) -> String {
        let mut s = String::new();
        self.write_derivation(&mut s);
        s
    }

    fn write_derivation(&self, s: &mut String) {
        let _ = write!(s, "{} ", self.production().0);
        match &self.kind {
            TreeKind::Terminal { .. } => {}
            TreeKind::Unit { child, .. } => child.write_derivation(s),
            TreeKind::Concat { children, .. } => children.iter().for_each(|c| c.write_derivation(s)),
        }
    }

    /// Deterministic order among equal scores.
    pub fn tie_key(&self, g: &Grammar) -> (String, String, String) {
        (self.expression(g).to_latex(), self.partition_shape(), self.derivation())
    }
}

/// A tree score split by factor type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TreeScore {
    pub total: f64,
    pub symbol: f64,
    pub relation: f64,
    pub bag: f64,
}

/// Recomputes a tree's score bottom-up from the scorer's factors.
pub fn score_tree<S: TreeScorer + ?Sized>(tree: &ParseTree, g: &Grammar, scorer: &mut S) -> TreeScore {
    match &tree.kind {
        TreeKind::Terminal { terminal, .. } => {
            let f = scorer.terminal(*terminal, tree.subset);
            TreeScore { total: f.total(), symbol: f.symbol, relation: 0.0, bag: f.bag }
        }
        TreeKind::Unit { child, .. } => score_tree(child, g, scorer),
        TreeKind::Concat { relation, children, .. } => {
            let parts: Vec<TreeScore> = children.iter().map(|c| score_tree(c, g, scorer)).collect();
            let keyed: Vec<(StrokeSet, ClassKey)> = children.iter().map(|c| (c.subset, c.class())).collect();
            let rel = relation_sum(scorer, *relation, &keyed);
            let totals: Vec<f64> = parts.iter().map(|p| p.total).collect();
            TreeScore {
                total: concat_score(&totals, rel),
                symbol: parts.iter().map(|p| p.symbol).sum(),
                relation: parts.iter().map(|p| p.relation).sum::<f64>() + rel,
                bag: parts.iter().map(|p| p.bag).sum(),
            }
        }
    }
}
