//! Ground-truth annotations carried alongside ink.

use serde::{Deserialize, Serialize};

use crate::grammar::{Expression, Relation};
use crate::ink::StrokeSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolGroup {
    pub symbol: String,
    pub strokes: Vec<usize>,
}

impl SymbolGroup {
    pub fn set(&self) -> StrokeSet {
        self.strokes.iter().copied().collect()
    }
}

/// An expression tree whose every node knows the strokes it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthExpr {
    Symbol {
        #[serde(rename = "t")]
        symbol: String,
        strokes: Vec<usize>,
    },
    Concat {
        #[serde(rename = "rel")]
        relation: Relation,
        #[serde(rename = "args")]
        children: Vec<TruthExpr>,
    },
}

impl TruthExpr {
    pub fn set(&self) -> StrokeSet {
        match self {
            TruthExpr::Symbol { strokes, .. } => strokes.iter().copied().collect(),
            TruthExpr::Concat { children, .. } => {
                children.iter().fold(StrokeSet::empty(), |s, c| s.union(c.set()))
            }
        }
    }

    pub fn expression(&self) -> Expression {
        match self {
            TruthExpr::Symbol { symbol, .. } => Expression::terminal(symbol.clone()),
            TruthExpr::Concat { relation, children } => {
                Expression::concat(*relation, children.iter().map(|c| c.expression()).collect())
            }
        }
    }

    /// Leaves in left-to-right order.
    pub fn groups(&self) -> Vec<SymbolGroup> {
        let mut out = Vec::new();
        self.collect_groups(&mut out);
        out
    }

    fn collect_groups(&self, out: &mut Vec<SymbolGroup>) {
        match self {
            TruthExpr::Symbol { symbol, strokes } => out.push(SymbolGroup {
                symbol: symbol.clone(),
                strokes: strokes.clone(),
            }),
            TruthExpr::Concat { children, .. } => {
                children.iter().for_each(|c| c.collect_groups(out))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub groups: Vec<SymbolGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<TruthExpr>,
}

impl Truth {
    pub fn from_expr(expr: TruthExpr) -> Self {
        Truth {
            groups: expr.groups(),
            expr: Some(expr),
        }
    }
}
