//! Reference implementations shared by the integration suites.
#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use inkgram::forest::{partitions, CutRules, Forest, ForestConfig, Layout, NodeId, NodeKind};
use inkgram::grammar::{Expression, Grammar, NonterminalId, Relation, Symbol, TerminalId};
use inkgram::ink::{Observable, Point, StrokeSet};
use inkgram::model::Model;
use inkgram::relations::{self, GEN};
use inkgram::scoring::{score_tree, ClassKey, ParseTree, TerminalFactor, TreeKind, TreeScorer};

pub fn hash01<T: Hash>(key: T) -> f64 {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    (h.finish() >> 11) as f64 / (1u64 << 53) as f64
}

/// Pseudo-random factors keyed on their arguments.
pub struct HashScorer {
    pub seed: u64,
}

impl TreeScorer for HashScorer {
    fn terminal(&mut self, t: TerminalId, o: StrokeSet) -> TerminalFactor {
        TerminalFactor {
            symbol: -4.0 + 5.0 * hash01((self.seed, "sym", t, o)),
            bag: -2.0 * hash01((self.seed, "bag", t)),
        }
    }

    fn relation(&mut self, rel: Relation, o1: StrokeSet, c1: ClassKey, o2: StrokeSet, c2: ClassKey) -> f64 {
        -3.0 + 4.0 * hash01((self.seed, "rel", rel, o1, c1, o2, c2))
    }
}

/// A row of two-point strokes at random heights.
pub fn random_strokes(seed: u64, n: usize) -> Observable {
    let strokes = (0..n)
        .map(|i| {
            let x = i as f64 * 1.2 + hash01((seed, i, "x")) * 0.6;
            let y = (hash01((seed, i, "y")) - 0.5) * 1.5;
            let h = 0.5 + hash01((seed, i, "h"));
            vec![Point::new(x, y), Point::new(x + 0.8, y + h)]
        })
        .collect();
    Observable::from_points(strokes).unwrap()
}

/// Random lexicon over 1- and 2-stroke subsets and a handful of the toy
/// grammar's terminals, so that ambiguity stays enumerable.
pub fn random_admission(g: &Grammar, seed: u64, density: f64) -> impl FnMut(StrokeSet, TerminalId) -> bool + '_ {
    const LEXICON: [&str; 7] = ["+", "-", "a", "x", "p", "P", "2"];
    move |o: StrokeSet, t: TerminalId| {
        let name = g.terminal_name(t);
        o.len() <= 2 && LEXICON.contains(&name) && hash01((seed, o, name)) < density
    }
}

/// Number of trees below a forest node.
pub fn tree_count(f: &Forest, id: NodeId) -> u128 {
    let node = f.node(id);
    match node.kind {
        NodeKind::Leaf { .. } => 1,
        NodeKind::And { .. } => node.children.iter().map(|&c| tree_count(f, c)).product(),
        _ => node.children.iter().map(|&c| tree_count(f, c)).sum(),
    }
}

/// Every tree of a forest node, each scored from scratch.
pub fn enumerate_trees<S: TreeScorer>(f: &Forest, g: &Grammar, id: NodeId, s: &mut S) -> Vec<Arc<ParseTree>> {
    let node = f.node(id);
    let raw: Vec<ParseTree> = match node.kind {
        NodeKind::OrNt { .. } => return node.children.iter().flat_map(|&c| enumerate_trees(f, g, c, s)).collect(),
        NodeKind::OrProd { production } => match f.node(node.children[0]).kind {
            NodeKind::Leaf { terminal } => {
                vec![ParseTree { subset: node.subset, score: 0.0, kind: TreeKind::Terminal { terminal, production } }]
            }
            NodeKind::OrNt { .. } => enumerate_trees(f, g, node.children[0], s)
                .into_iter()
                .map(|child| ParseTree { subset: node.subset, score: 0.0, kind: TreeKind::Unit { production, child } })
                .collect(),
            _ => {
                let relation = g.production(production).relation.unwrap();
                let mut out = Vec::new();
                for &and in &node.children {
                    let mut combos: Vec<Vec<Arc<ParseTree>>> = vec![vec![]];
                    for &c in &f.node(and).children {
                        let options = enumerate_trees(f, g, c, s);
                        combos = combos
                            .into_iter()
                            .flat_map(|prefix| {
                                options.iter().map(move |t| {
                                    let mut v = prefix.clone();
                                    v.push(t.clone());
                                    v
                                })
                            })
                            .collect();
                    }
                    out.extend(combos.into_iter().map(|children| ParseTree {
                        subset: node.subset,
                        score: 0.0,
                        kind: TreeKind::Concat { production, relation, children },
                    }));
                }
                out
            }
        },
        _ => unreachable!("enumeration starts at OR nodes"),
    };
    raw.into_iter()
        .map(|mut t| {
            t.score = score_tree(&t, g, s).total;
            Arc::new(t)
        })
        .collect()
}

/// Best first; ties by the documented key.
pub fn sort_trees(mut v: Vec<Arc<ParseTree>>, g: &Grammar) -> Vec<Arc<ParseTree>> {
    v.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tie_key(g).cmp(&b.tie_key(g))));
    v
}

/// Unmemoized top-down parser over the grammar as written (not
/// normalized): the set of expressions `a` derives on `o`.
pub struct NaiveParser<'a, A: FnMut(StrokeSet, TerminalId) -> bool> {
    pub grammar: &'a Grammar,
    pub layout: Layout,
    pub rules: CutRules,
    pub admit: A,
}

impl<'a, A: FnMut(StrokeSet, TerminalId) -> bool> NaiveParser<'a, A> {
    pub fn new(grammar: &'a Grammar, obs: &Observable, config: &ForestConfig, admit: A) -> Self {
        NaiveParser {
            grammar,
            layout: Layout::new(obs.strokes().iter().map(|s| s.bbox()).collect()),
            rules: CutRules {
                prune_overlap: (obs.len() > config.prune_above).then_some(config.prune_overlap),
                contain_overlap: config.contain_overlap,
                eps: obs.degenerate_eps(),
            },
            admit,
        }
    }

    fn symbol(&mut self, o: StrokeSet, s: Symbol) -> BTreeSet<Expression> {
        match s {
            Symbol::T(t) => {
                if (self.admit)(o, t) {
                    BTreeSet::from([Expression::terminal(self.grammar.terminal_name(t))])
                } else {
                    BTreeSet::new()
                }
            }
            Symbol::N(a) => self.parse(o, a),
        }
    }

    pub fn parse(&mut self, o: StrokeSet, a: NonterminalId) -> BTreeSet<Expression> {
        let g = self.grammar;
        let mut out = BTreeSet::new();
        for (_, p) in g.productions_of(a) {
            let Some(rel) = p.relation.filter(|_| p.rhs.len() > 1) else {
                out.extend(self.symbol(o, p.rhs[0]));
                continue;
            };
            for parts in partitions(&self.layout, o, p.rhs.len(), rel, &self.rules) {
                let mut acc: Vec<Vec<Expression>> = vec![vec![]];
                for (&part, &sym) in parts.iter().zip(&p.rhs) {
                    let options = self.symbol(part, sym);
                    acc = acc
                        .iter()
                        .flat_map(|prefix| {
                            options.iter().map(move |e| {
                                let mut v = prefix.clone();
                                v.push(e.clone());
                                v
                            })
                        })
                        .collect();
                    if acc.is_empty() {
                        break;
                    }
                }
                out.extend(acc.into_iter().map(|children| Expression::concat(rel, children)));
            }
        }
        out
    }
}

/// All non-empty subsets of the first `n` strokes.
pub fn all_subsets(n: usize) -> Vec<StrokeSet> {
    (1u64..(1 << n)).map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect()).collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln(1 + e^x) without overflow.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// log Pr(R = NIL), log Pr(R = r) for raw log R values.
fn relation_log_probs(log_r: &[f64; 5]) -> (f64, [f64; 5]) {
    let n = ln_1p_exp(log_r.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let total = log_sum_exp(log_r);
    let mass = (n / (n + 1.0)).ln();
    (-(n + 1.0).ln(), log_r.map(|l| mass + l - total))
}

fn chain(g: &Grammar, c: ClassKey) -> Vec<String> {
    match c {
        ClassKey::Terminal(t) => relations::terminal_chain(g.terminal_name(t), &g.terminal(t).class),
        ClassKey::Expr => relations::expr_chain(),
    }
}

fn adjacent_pairs(t: &ParseTree, out: &mut HashMap<(StrokeSet, StrokeSet), (Relation, ClassKey, ClassKey)>) {
    match &t.kind {
        TreeKind::Terminal { .. } => {}
        TreeKind::Unit { child, .. } => adjacent_pairs(child, out),
        TreeKind::Concat { relation, children, .. } => {
            for w in children.windows(2) {
                out.insert((w[0].subset, w[1].subset), (*relation, w[0].class(), w[1].class()));
            }
            for c in children {
                adjacent_pairs(c, out);
            }
        }
    }
}

/// log of the joint probability of the assignment a tree induces, over
/// every symbol, relation, bag and expression variable of the input,
/// divided by Z (the all-NIL symbol and generic-NIL relation product).
/// `bag` is Pr(B = t) per grammar terminal.
pub fn whole_network_log_score(model: &Model, obs: &Observable, bag: &[f64], tree: &ParseTree) -> f64 {
    let g = &model.grammar;
    let ctx = model.symbols.grouping_context(obs);
    let leaves: HashMap<StrokeSet, TerminalId> = tree.leaves().into_iter().map(|(t, o)| (o, t)).collect();
    let mut pairs = HashMap::new();
    adjacent_pairs(tree, &mut pairs);

    let subsets = all_subsets(obs.len());
    let (mut joint, mut z) = (0.0, 0.0);
    for &o in &subsets {
        // symbol variable
        let s = model.symbols.symbol_score(obs, o, &ctx).unwrap();
        let max = s.scores.iter().copied().fold(0.0, f64::max);
        let total: f64 = s.scores.iter().sum();
        let n = (1.0 + s.grouping * max).ln();
        let log_nil = (1.0 / (n + 1.0)).ln();
        z += log_nil;
        match leaves.get(&o) {
            Some(&t) => {
                let i = model.symbols.symbol_index(g.terminal_name(t)).unwrap();
                joint += (n / (n + 1.0) * s.scores[i] / total).ln();
                // bag variable; NIL bag terms are 1
                joint += bag[t.0 as usize].ln();
            }
            None => joint += log_nil,
        }
    }
    let gen = [GEN.to_string()];
    for &o1 in &subsets {
        for &o2 in &subsets {
            if !o1.is_disjoint(o2) {
                continue;
            }
            let f = relations::relation_features(obs, o1, o2).unwrap();
            let (gen_nil, _) = relation_log_probs(&model.relations.classify(&gen, &gen, &f).unwrap().log_r);
            z += gen_nil;
            joint += match pairs.get(&(o1, o2)) {
                Some(&(rel, c1, c2)) => {
                    let scores = model.relations.classify(&chain(g, c1), &chain(g, c2), &f).unwrap();
                    relation_log_probs(&scores.log_r).1[rel.index()]
                }
                None => gen_nil,
            };
        }
    }
    // expression variables are deterministic given the rest: factor 1
    joint - z
}
