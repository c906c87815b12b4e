use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::Relation;

/// A representable expression: a terminal, or an r-concatenation of two or
/// more sub-expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expression {
    Terminal {
        #[serde(rename = "t")]
        symbol: String,
    },
    Concat {
        #[serde(rename = "rel")]
        relation: Relation,
        #[serde(rename = "args")]
        children: Vec<Expression>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    /// TeX-flavoured text: `x^{2}`, `\frac{a}{b}`, `\sqrt{x}`.
    LatexLike,
    /// Compact JSON, the wire format consumed by clients.
    Structured,
}

impl Expression {
    pub fn terminal(symbol: impl Into<String>) -> Self {
        Expression::Terminal {
            symbol: symbol.into(),
        }
    }

    pub fn concat(relation: Relation, children: Vec<Expression>) -> Self {
        debug_assert!(children.len() >= 2);
        Expression::Concat { relation, children }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Expression::Terminal { .. })
    }

    /// Number of terminal leaves.
    pub fn symbol_count(&self) -> usize {
        match self {
            Expression::Terminal { .. } => 1,
            Expression::Concat { children, .. } => children.iter().map(|c| c.symbol_count()).sum(),
        }
    }

    pub fn render(&self, style: RenderStyle) -> String {
        match style {
            RenderStyle::LatexLike => self.to_latex(),
            RenderStyle::Structured => serde_json::to_string(self).expect("expression serializes"),
        }
    }

    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        self.write_latex(&mut out);
        out
    }

    fn write_latex(&self, out: &mut String) {
        match self {
            Expression::Terminal { symbol } => write_symbol(symbol, out),
            Expression::Concat { relation, children } => match relation {
                Relation::Right => children.iter().for_each(|c| c.write_latex(out)),
                Relation::Super | Relation::Sub => {
                    let mark = if *relation == Relation::Super { '^' } else { '_' };
                    children[0].write_latex(out);
                    for c in &children[1..] {
                        out.push(mark);
                        out.push('{');
                        c.write_latex(out);
                        out.push('}');
                    }
                }
                Relation::Below => {
                    let is_fraction = children.len() == 3
                        && matches!(&children[1], Expression::Terminal { symbol } if symbol == "-");
                    if is_fraction {
                        out.push_str("\\frac");
                        for c in [&children[0], &children[2]] {
                            out.push('{');
                            c.write_latex(out);
                            out.push('}');
                        }
                    } else {
                        out.push_str("\\stack");
                        for c in children {
                            out.push('{');
                            c.write_latex(out);
                            out.push('}');
                        }
                    }
                }
                Relation::Contain => {
                    let rest = match &children[0] {
                        Expression::Terminal { symbol } => {
                            write_symbol(symbol, out);
                            &children[1..]
                        }
                        _ => {
                            out.push_str("\\contain");
                            &children[..]
                        }
                    };
                    for c in rest {
                        out.push('{');
                        c.write_latex(out);
                        out.push('}');
                    }
                }
            },
        }
    }
}

fn write_symbol(symbol: &str, out: &mut String) {
    if symbol.chars().count() > 1 {
        let _ = write!(out, "\\{symbol}");
    } else {
        out.push_str(symbol);
    }
}
