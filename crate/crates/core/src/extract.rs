//! Lazy k-best tree extraction over a parse forest.
//!
//! Each (forest node, class) pair owns a stream of trees in nonincreasing
//! score order, produced on demand from a priority queue over its sources.
//! The class (a specific terminal, or "composite expression") matters
//! because relation factors depend on it: an AND node is split into one
//! tuple lattice per combination of child classes, and each lattice's
//! relation terms are then constant, so tuple scores grow with the child
//! scores and the usual successor scheme stays exact.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::forest::{Forest, NodeId, NodeKind};
use crate::grammar::{Grammar, ProductionId, Relation};
use crate::ink::StrokeSet;
use crate::scoring::{concat_score, relation_sum, ClassKey, ParseTree, TreeKind, TreeScorer};

pub type StreamId = usize;

#[derive(Debug, Clone)]
struct Cand {
    score: f64,
    key: Vec<usize>,
}

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        self.score.total_cmp(&o.score).then_with(|| o.key.cmp(&self.key))
    }
}

enum StreamKind {
    Single(Arc<ParseTree>),
    Merge {
        sources: Vec<StreamId>,
        wrap: Option<ProductionId>,
    },
    Lattice {
        production: ProductionId,
        relation: Relation,
        subset: StrokeSet,
        parts: Vec<StreamId>,
        rel_sum: f64,
        seen: HashSet<Vec<usize>>,
    },
    /// Source trees accepted by a constraint, in source order.
    Filter {
        source: StreamId,
        constraint: usize,
        pulled: usize,
    },
}

struct Stream {
    kind: StreamKind,
    emitted: Vec<Arc<ParseTree>>,
    heap: BinaryHeap<Cand>,
    started: bool,
}

impl Stream {
    fn new(kind: StreamKind) -> Self {
        Stream {
            kind,
            emitted: Vec::new(),
            heap: BinaryHeap::new(),
            started: false,
        }
    }
}

pub type TreePredicate = Arc<dyn Fn(&ParseTree) -> bool + Send + Sync>;

/// Every extracted tree must contain a node over `subset`, and that node's
/// trees must satisfy `accept`.
#[derive(Clone)]
pub struct Constraint {
    pub subset: StrokeSet,
    pub accept: TreePredicate,
}

pub struct Extractor<'f, S: TreeScorer> {
    forest: &'f Forest,
    grammar: &'f Grammar,
    scorer: S,
    classes: HashMap<NodeId, Vec<ClassKey>>,
    streams: Vec<Stream>,
    by_node: HashMap<(NodeId, Option<ClassKey>), StreamId>,
    constraints: Vec<Constraint>,
    filter_limit: usize,
}

impl<'f, S: TreeScorer> Extractor<'f, S> {
    pub fn new(forest: &'f Forest, grammar: &'f Grammar, scorer: S) -> Self {
        Extractor {
            forest,
            grammar,
            scorer,
            classes: HashMap::new(),
            streams: Vec::new(),
            by_node: HashMap::new(),
            constraints: Vec::new(),
            filter_limit: usize::MAX,
        }
    }

    /// Restricts all extraction to trees honoring `constraints`. A filtered
    /// node gives up after examining `limit` source trees.
    pub fn with_constraints(mut self, constraints: Vec<Constraint>, limit: usize) -> Self {
        assert!(self.streams.is_empty(), "constraints must precede extraction");
        self.constraints = constraints;
        self.filter_limit = limit;
        self
    }

    /// A leaf over `o` cannot contain a node over a strictly smaller
    /// constrained subset.
    fn leaf_allowed(&self, o: StrokeSet) -> bool {
        !self.constraints.iter().any(|c| c.subset.is_subset_of(o) && c.subset != o)
    }

    /// An AND node must keep each strictly smaller constrained subset
    /// inside a single part.
    fn and_allowed(&self, and: NodeId) -> bool {
        let node = self.forest.node(and);
        self.constraints.iter().all(|c| {
            !(c.subset.is_subset_of(node.subset) && c.subset != node.subset)
                || node.children.iter().any(|&k| c.subset.is_subset_of(self.forest.node(k).subset))
        })
    }

    pub fn scorer(&mut self) -> &mut S {
        &mut self.scorer
    }

    pub fn into_scorer(self) -> S {
        self.scorer
    }

    pub fn forest(&self) -> &'f Forest {
        self.forest
    }

    /// Classes of the trees a node can produce.
    pub fn classes(&mut self, id: NodeId) -> Vec<ClassKey> {
        if let Some(c) = self.classes.get(&id) {
            return c.clone();
        }
        let node = self.forest.node(id);
        let mut out = match node.kind {
            NodeKind::Leaf { terminal } => vec![ClassKey::Terminal(terminal)],
            NodeKind::And { .. } => vec![ClassKey::Expr],
            NodeKind::OrNt { .. } | NodeKind::OrProd { .. } => {
                let kids = node.children.clone();
                kids.into_iter().flat_map(|c| self.classes(c)).collect()
            }
        };
        out.sort();
        out.dedup();
        self.classes.insert(id, out.clone());
        out
    }

    fn add(&mut self, kind: StreamKind) -> StreamId {
        self.streams.push(Stream::new(kind));
        self.streams.len() - 1
    }

    /// Stream of every tree of a node, all classes merged.
    pub fn node_stream(&mut self, id: NodeId) -> StreamId {
        if let Some(&s) = self.by_node.get(&(id, None)) {
            return s;
        }
        let sources = self
            .classes(id)
            .into_iter()
            .map(|c| self.class_stream(id, c))
            .collect();
        let s = self.add(StreamKind::Merge { sources, wrap: None });
        self.by_node.insert((id, None), s);
        s
    }

    fn class_stream(&mut self, id: NodeId, class: ClassKey) -> StreamId {
        if let Some(&s) = self.by_node.get(&(id, Some(class))) {
            return s;
        }
        let node = self.forest.node(id);
        let kind = match node.kind {
            NodeKind::OrNt { .. } => {
                let mut sources = Vec::new();
                for c in node.children.clone() {
                    if self.classes(c).contains(&class) {
                        sources.push(self.class_stream(c, class));
                    }
                }
                StreamKind::Merge { sources, wrap: None }
            }
            NodeKind::OrProd { production } => {
                let child = self.forest.node(node.children[0]);
                match child.kind {
                    NodeKind::Leaf { .. } if !self.leaf_allowed(node.subset) => {
                        StreamKind::Merge { sources: vec![], wrap: None }
                    }
                    NodeKind::Leaf { terminal } => {
                        let score = self.scorer.terminal(terminal, node.subset).total();
                        StreamKind::Single(Arc::new(ParseTree {
                            subset: node.subset,
                            score,
                            kind: TreeKind::Terminal { terminal, production },
                        }))
                    }
                    NodeKind::OrNt { .. } => StreamKind::Merge {
                        sources: vec![self.class_stream(node.children[0], class)],
                        wrap: Some(production),
                    },
                    _ => {
                        let mut sources = Vec::new();
                        for and in node.children.clone() {
                            if self.and_allowed(and) {
                                sources.extend(self.lattices(and));
                            }
                        }
                        StreamKind::Merge { sources, wrap: None }
                    }
                }
            }
            NodeKind::Leaf { .. } | NodeKind::And { .. } => {
                unreachable!("streams are keyed by OR nodes")
            }
        };
        let mut s = self.add(kind);
        if matches!(node.kind, NodeKind::OrNt { .. }) {
            for constraint in 0..self.constraints.len() {
                if self.constraints[constraint].subset == node.subset {
                    s = self.add(StreamKind::Filter { source: s, constraint, pulled: 0 });
                }
            }
        }
        self.by_node.insert((id, Some(class)), s);
        s
    }

    /// One lattice stream per combination of child classes.
    fn lattices(&mut self, and: NodeId) -> Vec<StreamId> {
        let node = self.forest.node(and);
        let NodeKind::And { production } = node.kind else {
            unreachable!()
        };
        let relation = self.grammar.production(production).relation.unwrap();
        let kids = node.children.clone();
        let subset = node.subset;
        let options: Vec<Vec<ClassKey>> = kids.iter().map(|&k| self.classes(k)).collect();
        let mut combos: Vec<Vec<ClassKey>> = vec![vec![]];
        for opts in &options {
            combos = combos
                .into_iter()
                .flat_map(|p| {
                    opts.iter().map(move |&c| {
                        let mut v = p.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        let mut out = Vec::with_capacity(combos.len());
        for combo in combos {
            let keyed: Vec<(StrokeSet, ClassKey)> = kids
                .iter()
                .zip(&combo)
                .map(|(&k, &c)| (self.forest.node(k).subset, c))
                .collect();
            let rel_sum = relation_sum(&mut self.scorer, relation, &keyed);
            let parts = kids
                .iter()
                .zip(&combo)
                .map(|(&k, &c)| self.class_stream(k, c))
                .collect();
            out.push(self.add(StreamKind::Lattice {
                production,
                relation,
                subset,
                parts,
                rel_sum,
                seen: HashSet::new(),
            }));
        }
        out
    }

    /// The `i`-th best tree of a stream, computing it if needed.
    pub fn get(&mut self, sid: StreamId, i: usize) -> Option<Arc<ParseTree>> {
        while self.streams[sid].emitted.len() <= i {
            if !self.advance(sid) {
                return None;
            }
        }
        Some(self.streams[sid].emitted[i].clone())
    }

    fn lattice_score(&mut self, parts: &[StreamId], tuple: &[usize], rel_sum: f64) -> Option<f64> {
        let mut scores = Vec::with_capacity(parts.len());
        for (&p, &j) in parts.iter().zip(tuple) {
            scores.push(self.get(p, j)?.score);
        }
        Some(concat_score(&scores, rel_sum))
    }

    fn start(&mut self, sid: StreamId) {
        self.streams[sid].started = true;
        let mut seeds = Vec::new();
        match &self.streams[sid].kind {
            StreamKind::Single(t) => {
                let t = t.clone();
                self.streams[sid].emitted.push(t);
                return;
            }
            StreamKind::Merge { sources, .. } => {
                let sources = sources.clone();
                for (k, s) in sources.into_iter().enumerate() {
                    if let Some(t) = self.get(s, 0) {
                        seeds.push(Cand { score: t.score, key: vec![k, 0] });
                    }
                }
            }
            StreamKind::Lattice { parts, rel_sum, .. } => {
                let (parts, rel_sum) = (parts.clone(), *rel_sum);
                let zero = vec![0; parts.len()];
                if let Some(score) = self.lattice_score(&parts, &zero, rel_sum) {
                    if let StreamKind::Lattice { seen, .. } = &mut self.streams[sid].kind {
                        seen.insert(zero.clone());
                    }
                    seeds.push(Cand { score, key: zero });
                }
            }
            StreamKind::Filter { .. } => unreachable!("filters do not queue"),
        }
        self.streams[sid].heap.extend(seeds);
    }

    fn advance_filter(&mut self, sid: StreamId) -> bool {
        loop {
            let StreamKind::Filter { source, constraint, pulled } = self.streams[sid].kind else {
                unreachable!()
            };
            if pulled >= self.filter_limit {
                return false;
            }
            let Some(t) = self.get(source, pulled) else {
                return false;
            };
            if let StreamKind::Filter { pulled, .. } = &mut self.streams[sid].kind {
                *pulled += 1;
            }
            if (self.constraints[constraint].accept)(&t) {
                self.streams[sid].emitted.push(t);
                return true;
            }
        }
    }

    /// Emits the next tree of a stream; false when exhausted.
    fn advance(&mut self, sid: StreamId) -> bool {
        if matches!(self.streams[sid].kind, StreamKind::Filter { .. }) {
            return self.advance_filter(sid);
        }
        if !self.streams[sid].started {
            self.start(sid);
            if matches!(self.streams[sid].kind, StreamKind::Single(_)) {
                return true;
            }
        }
        let Some(top) = self.streams[sid].heap.pop() else {
            return false;
        };
        match &self.streams[sid].kind {
            StreamKind::Single(_) | StreamKind::Filter { .. } => false,
            StreamKind::Merge { sources, wrap } => {
                let (k, j) = (top.key[0], top.key[1]);
                let (src, wrap) = (sources[k], *wrap);
                let child = self.get(src, j).expect("queued trees exist");
                let tree = match wrap {
                    Some(production) => Arc::new(ParseTree {
                        subset: child.subset,
                        score: child.score,
                        kind: TreeKind::Unit { production, child },
                    }),
                    None => child,
                };
                self.streams[sid].emitted.push(tree);
                if let Some(next) = self.get(src, j + 1) {
                    self.streams[sid].heap.push(Cand { score: next.score, key: vec![k, j + 1] });
                }
                true
            }
            StreamKind::Lattice { production, relation, subset, parts, rel_sum, .. } => {
                let (production, relation, subset, parts, rel_sum) =
                    (*production, *relation, *subset, parts.clone(), *rel_sum);
                let children: Vec<Arc<ParseTree>> = parts
                    .iter()
                    .zip(&top.key)
                    .map(|(&p, &j)| self.get(p, j).expect("queued trees exist"))
                    .collect();
                self.streams[sid].emitted.push(Arc::new(ParseTree {
                    subset,
                    score: top.score,
                    kind: TreeKind::Concat { production, relation, children },
                }));
                for i in 0..parts.len() {
                    let mut next = top.key.clone();
                    next[i] += 1;
                    let fresh = match &self.streams[sid].kind {
                        StreamKind::Lattice { seen, .. } => !seen.contains(&next),
                        _ => unreachable!(),
                    };
                    if !fresh {
                        continue;
                    }
                    if let Some(score) = self.lattice_score(&parts, &next, rel_sum) {
                        if let StreamKind::Lattice { seen, .. } = &mut self.streams[sid].kind {
                            seen.insert(next.clone());
                        }
                        self.streams[sid].heap.push(Cand { score, key: next });
                    }
                }
                true
            }
        }
    }

    /// Cursor over a node's trees with equal-score runs put in tie-key order.
    pub fn cursor(&mut self, node: NodeId) -> Cursor {
        Cursor {
            stream: self.node_stream(node),
            raw: 0,
            buffer: VecDeque::new(),
            filter: None,
            limit: usize::MAX,
        }
    }

    /// Next tree from a cursor, or `None` when the node is exhausted.
    pub fn next(&mut self, cur: &mut Cursor) -> Option<Arc<ParseTree>> {
        loop {
            if cur.buffer.is_empty() {
                if cur.raw >= cur.limit {
                    return None;
                }
                let first = self.get(cur.stream, cur.raw)?;
                cur.raw += 1;
                let mut group = vec![first.clone()];
                while let Some(t) = self.get(cur.stream, cur.raw) {
                    if t.score < first.score {
                        break;
                    }
                    group.push(t);
                    cur.raw += 1;
                }
                if group.len() > 1 {
                    let g = self.grammar;
                    let mut keyed: Vec<_> = group.into_iter().map(|t| (t.tie_key(g), t)).collect();
                    keyed.sort_by(|a, b| a.0.cmp(&b.0));
                    group = keyed.into_iter().map(|(_, t)| t).collect();
                }
                cur.buffer.extend(group);
            }
            let t = cur.buffer.pop_front().unwrap();
            match &cur.filter {
                Some(f) if !f(&t) => continue,
                _ => return Some(t),
            }
        }
    }

    /// The best `k` trees of a node in final order.
    pub fn top(&mut self, node: NodeId, k: usize) -> Vec<Arc<ParseTree>> {
        let mut cur = self.cursor(node);
        let mut out = Vec::new();
        while out.len() < k {
            match self.next(&mut cur) {
                Some(t) => out.push(t),
                None => break,
            }
        }
        out
    }
}

pub type TreeFilter = Box<dyn Fn(&ParseTree) -> bool + Send>;

/// Read position in a node's ranked trees.
pub struct Cursor {
    stream: StreamId,
    raw: usize,
    buffer: VecDeque<Arc<ParseTree>>,
    filter: Option<TreeFilter>,
    limit: usize,
}

impl Cursor {
    /// Only trees accepted by `f` are returned.
    pub fn with_filter(mut self, f: TreeFilter) -> Self {
        self.filter = Some(f);
        self
    }

    /// Stop once `n` raw trees have been pulled; bounds filtered searches.
    pub fn with_limit(mut self, n: usize) -> Self {
        self.limit = n;
        self
    }

    /// True if the cursor stopped at its limit rather than exhausting the node.
    pub fn hit_limit(&self) -> bool {
        self.raw >= self.limit
    }

    /// Number of raw trees pulled from the node so far.
    pub fn pulled(&self) -> usize {
        self.raw
    }
}
