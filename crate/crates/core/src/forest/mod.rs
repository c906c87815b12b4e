//! Memoized top-down parsing into a shared AND/OR forest.

pub mod partition;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Expression, Grammar, NonterminalId, ProductionId, Symbol, TerminalId};
use crate::ink::{Observable, StrokeSet};
pub use partition::{compositions, partitions, CutRules, Layout};

pub type NodeId = usize;

/// Decides whether a stroke subset may be read as a terminal.
pub trait Admission {
    fn admits(&mut self, o: StrokeSet, t: TerminalId) -> bool;
}

impl<F: FnMut(StrokeSet, TerminalId) -> bool> Admission for F {
    fn admits(&mut self, o: StrokeSet, t: TerminalId) -> bool {
        self(o, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// A terminal read from the node's subset.
    Leaf { terminal: TerminalId },
    /// All parses of a nonterminal; children are `OrProd` nodes.
    OrNt { nonterminal: NonterminalId },
    /// All parses through one production. Children are `And` nodes, or a
    /// single `OrNt` for a unit production, or a single `Leaf`.
    OrProd { production: ProductionId },
    /// One partition of the subset; children are the `OrNt` nodes of the parts.
    And { production: ProductionId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub subset: StrokeSet,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ForestStats {
    pub or_nodes: usize,
    pub and_nodes: usize,
    pub leaves: usize,
    pub subsets_examined: usize,
    pub table_entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    /// Overlap pruning applies to inputs with more strokes than this.
    pub prune_above: usize,
    pub prune_overlap: f64,
    pub contain_overlap: f64,
    pub max_entries: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            prune_above: 12,
            prune_overlap: 0.9,
            contain_overlap: 0.5,
            max_entries: 2_000_000,
        }
    }
}

impl ForestConfig {
    pub fn unpruned() -> Self {
        ForestConfig {
            prune_above: usize::MAX,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    nodes: Vec<Node>,
    root: Option<NodeId>,
    stats: ForestStats,
    index: HashMap<(StrokeSet, NonterminalId), NodeId>,
}

struct Builder<'a, A: Admission> {
    grammar: &'a Grammar,
    layout: Layout,
    rules: CutRules,
    admission: &'a mut A,
    max_entries: usize,
    nodes: Vec<Node>,
    nt_memo: HashMap<(StrokeSet, NonterminalId), Option<NodeId>>,
    leaf_memo: HashMap<(StrokeSet, TerminalId), Option<NodeId>>,
    subsets: HashSet<StrokeSet>,
}

impl<A: Admission> Builder<'_, A> {
    fn push(&mut self, kind: NodeKind, subset: StrokeSet, children: Vec<NodeId>) -> NodeId {
        self.nodes.push(Node { kind, subset, children });
        self.nodes.len() - 1
    }

    fn check_cap(&self) -> Result<()> {
        if self.nt_memo.len() + self.leaf_memo.len() > self.max_entries {
            return Err(Error::ComplexityLimit { cap: self.max_entries });
        }
        Ok(())
    }

    fn leaf(&mut self, o: StrokeSet, t: TerminalId) -> Result<Option<NodeId>> {
        if let Some(&r) = self.leaf_memo.get(&(o, t)) {
            return Ok(r);
        }
        self.subsets.insert(o);
        let r = self
            .admission
            .admits(o, t)
            .then(|| self.push(NodeKind::Leaf { terminal: t }, o, vec![]));
        self.leaf_memo.insert((o, t), r);
        self.check_cap()?;
        Ok(r)
    }

    fn nonterminal(&mut self, o: StrokeSet, a: NonterminalId) -> Result<Option<NodeId>> {
        if let Some(&r) = self.nt_memo.get(&(o, a)) {
            return Ok(r);
        }
        self.subsets.insert(o);
        let grammar = self.grammar;
        let mut prods = Vec::new();
        for (pid, p) in grammar.productions_of(a) {
            let children = if p.is_terminal() {
                let Symbol::T(t) = p.rhs[0] else { unreachable!() };
                self.leaf(o, t)?.into_iter().collect()
            } else if p.is_unit() {
                let Symbol::N(b) = p.rhs[0] else { unreachable!() };
                self.nonterminal(o, b)?.into_iter().collect()
            } else {
                self.and_nodes(o, pid)?
            };
            if !children.is_empty() {
                prods.push(self.push(NodeKind::OrProd { production: pid }, o, children));
            }
        }
        let r = (!prods.is_empty()).then(|| self.push(NodeKind::OrNt { nonterminal: a }, o, prods));
        self.nt_memo.insert((o, a), r);
        self.check_cap()?;
        Ok(r)
    }

    fn and_nodes(&mut self, o: StrokeSet, pid: ProductionId) -> Result<Vec<NodeId>> {
        let p = self.grammar.production(pid);
        let relation = p.relation.expect("normalized multi-symbol production");
        let k = p.rhs.len();
        let mut out = Vec::new();
        for parts in partitions(&self.layout, o, k, relation, &self.rules) {
            let mut kids = Vec::with_capacity(k);
            for (part, &sym) in parts.iter().zip(&p.rhs) {
                let Symbol::N(b) = sym else {
                    panic!("grammar must be normalized before parsing");
                };
                match self.nonterminal(*part, b)? {
                    Some(n) => kids.push(n),
                    None => break,
                }
            }
            if kids.len() == k {
                out.push(self.push(NodeKind::And { production: pid }, o, kids));
            }
        }
        Ok(out)
    }
}

impl Forest {
    /// Parses the whole input from the grammar's start symbol. The grammar
    /// must be normalized.
    pub fn build<A: Admission>(
        obs: &Observable,
        grammar: &Grammar,
        admission: &mut A,
        config: &ForestConfig,
    ) -> Result<Forest> {
        assert!(grammar.is_normalized(), "grammar must be normalized before parsing");
        let layout = Layout::new(obs.strokes().iter().map(|s| s.bbox()).collect());
        let rules = CutRules {
            prune_overlap: (obs.len() > config.prune_above).then_some(config.prune_overlap),
            contain_overlap: config.contain_overlap,
            eps: obs.degenerate_eps(),
        };
        let mut b = Builder {
            grammar,
            layout,
            rules,
            admission,
            max_entries: config.max_entries,
            nodes: Vec::new(),
            nt_memo: HashMap::new(),
            leaf_memo: HashMap::new(),
            subsets: HashSet::new(),
        };
        let root = if obs.is_empty() {
            None
        } else {
            b.nonterminal(obs.all(), grammar.start())?
        };
        let mut stats = ForestStats {
            subsets_examined: b.subsets.len(),
            table_entries: b.nt_memo.len() + b.leaf_memo.len(),
            ..Default::default()
        };
        for n in &b.nodes {
            match n.kind {
                NodeKind::Leaf { .. } => stats.leaves += 1,
                NodeKind::And { .. } => stats.and_nodes += 1,
                _ => stats.or_nodes += 1,
            }
        }
        let index = b
            .nt_memo
            .iter()
            .filter_map(|(&k, &v)| v.map(|n| (k, n)))
            .collect();
        Ok(Forest {
            nodes: b.nodes,
            root,
            stats,
            index,
        })
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn stats(&self) -> ForestStats {
        self.stats
    }

    /// The `OrNt` node for (nonterminal, subset), if that parse succeeded.
    pub fn find(&self, nonterminal: NonterminalId, subset: StrokeSet) -> Option<NodeId> {
        self.index.get(&(subset, nonterminal)).copied()
    }

    /// Every expression derivable from a node. Exponential; meant for tests
    /// and small inputs.
    pub fn expressions(&self, grammar: &Grammar, id: NodeId) -> BTreeSet<Expression> {
        let mut memo = HashMap::new();
        self.exprs(grammar, id, &mut memo)
    }

    fn exprs(&self, g: &Grammar, id: NodeId, memo: &mut HashMap<NodeId, BTreeSet<Expression>>) -> BTreeSet<Expression> {
        if let Some(s) = memo.get(&id) {
            return s.clone();
        }
        let n = &self.nodes[id];
        let out = match n.kind {
            NodeKind::Leaf { terminal } => BTreeSet::from([Expression::terminal(g.terminal_name(terminal))]),
            NodeKind::OrNt { .. } | NodeKind::OrProd { .. } => {
                n.children.iter().flat_map(|&c| self.exprs(g, c, memo)).collect()
            }
            NodeKind::And { production } => {
                let rel = g.production(production).relation.unwrap();
                let mut acc: Vec<Vec<Expression>> = vec![vec![]];
                for &c in &n.children {
                    let opts = self.exprs(g, c, memo);
                    acc = acc
                        .iter()
                        .flat_map(|prefix| {
                            opts.iter().map(move |e| {
                                let mut v = prefix.clone();
                                v.push(e.clone());
                                v
                            })
                        })
                        .collect();
                }
                acc.into_iter().map(|ch| Expression::concat(rel, ch)).collect()
            }
        };
        memo.insert(id, out.clone());
        out
    }

    /// Indented text rendering of the forest reachable from the root.
    pub fn dump(&self, grammar: &Grammar) -> String {
        let mut out = String::new();
        let Some(root) = self.root else {
            out.push_str("(no parse)\n");
            return out;
        };
        let mut seen = HashSet::new();
        self.dump_node(grammar, root, 0, &mut seen, &mut out);
        let s = self.stats;
        let _ = writeln!(
            out,
            "-- {} or, {} and, {} leaves, {} subsets",
            s.or_nodes, s.and_nodes, s.leaves, s.subsets_examined
        );
        out
    }

    fn dump_node(&self, g: &Grammar, id: NodeId, depth: usize, seen: &mut HashSet<NodeId>, out: &mut String) {
        let n = &self.nodes[id];
        let pad = "  ".repeat(depth);
        let label = match n.kind {
            NodeKind::Leaf { terminal } => format!("leaf {}", g.terminal_name(terminal)),
            NodeKind::OrNt { nonterminal } => format!("or {}", g.nonterminal_name(nonterminal)),
            NodeKind::OrProd { production } => format!("prod {}", g.production_text(production)),
            NodeKind::And { .. } => {
                let parts: Vec<String> = n.children.iter().map(|&c| self.nodes[c].subset.to_string()).collect();
                format!("and {}", parts.join(" "))
            }
        };
        if !seen.insert(id) {
            let _ = writeln!(out, "{pad}#{id} {label} {} (shared)", n.subset);
            return;
        }
        let _ = writeln!(out, "{pad}#{id} {label} {}", n.subset);
        for &c in &n.children {
            self.dump_node(g, c, depth + 1, seen, out);
        }
    }
}

#[cfg(test)]
mod tests;
