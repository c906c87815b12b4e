//! Model-backed factors for one input.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::forest::{Admission, Forest, NodeKind};
use crate::grammar::{Grammar, Relation, TerminalId};
use crate::ink::{Observable, StrokeSet};
use crate::relations::{self, Features, RelationModel, GEN};
use crate::symbols::{GroupingContext, SymbolModel};
use crate::truth::SymbolGroup;

use super::{ClassKey, SymbolBag, TerminalFactor, TreeScorer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmissionConfig {
    pub min_grouping: f64,
    /// A terminal must score at least this fraction of the best symbol.
    pub relative_score: f64,
}

impl Default for AdmissionConfig {
    fn default() -> Self {
        AdmissionConfig {
            min_grouping: 1e-4,
            relative_score: 1e-3,
        }
    }
}

/// Default recognizes everything; Perfect admits only the true symbol
/// groups with their true labels and gives terminals a neutral factor.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoringMode {
    Default,
    Perfect(Vec<SymbolGroup>),
}

/// Pr(S = NIL) = 1 - N/(N+1) for N = ln(1 + G max S).
pub fn symbol_nil_probability(n: f64) -> f64 {
    1.0 - n / (n + 1.0)
}

#[derive(Debug, Clone)]
struct SymbolVar {
    scores: Vec<f64>,
    grouping: f64,
    max: f64,
    log_total: f64,
    /// N = ln(1 + G max S)
    n: f64,
}

pub struct InputScorer<'a> {
    grammar: &'a Grammar,
    symbols: &'a SymbolModel,
    relations: &'a RelationModel,
    obs: &'a Observable,
    admission: AdmissionConfig,
    mode: ScoringMode,
    grouping: Option<GroupingContext>,
    library_index: Vec<Option<usize>>,
    chains: Vec<Vec<String>>,
    expr_chain: Vec<String>,
    gen_chain: Vec<String>,
    bag: SymbolBag,
    log_bag: Option<Vec<f64>>,
    symbol_cache: HashMap<StrokeSet, SymbolVar>,
    feature_cache: HashMap<(StrokeSet, StrokeSet), Features>,
    relation_cache: HashMap<(StrokeSet, StrokeSet, ClassKey, ClassKey), [f64; 5]>,
    nil_cache: HashMap<(StrokeSet, StrokeSet), f64>,
}

impl<'a> InputScorer<'a> {
    pub fn new(
        grammar: &'a Grammar,
        symbols: &'a SymbolModel,
        relations: &'a RelationModel,
        bag: &SymbolBag,
        obs: &'a Observable,
        admission: AdmissionConfig,
        mode: ScoringMode,
    ) -> Self {
        let library_index = grammar
            .terminals()
            .iter()
            .map(|t| symbols.symbol_index(&t.name))
            .collect();
        let chains = grammar
            .terminals()
            .iter()
            .map(|t| relations::terminal_chain(&t.name, &t.class))
            .collect();
        let mut bag = bag.clone();
        bag.reset();
        InputScorer {
            grammar,
            symbols,
            relations,
            obs,
            admission,
            mode,
            grouping: None,
            library_index,
            chains,
            expr_chain: relations::expr_chain(),
            gen_chain: vec![GEN.to_string()],
            bag,
            log_bag: None,
            symbol_cache: HashMap::new(),
            feature_cache: HashMap::new(),
            relation_cache: HashMap::new(),
            nil_cache: HashMap::new(),
        }
    }

    pub fn grammar(&self) -> &Grammar {
        self.grammar
    }

    pub fn observable(&self) -> &Observable {
        self.obs
    }

    fn var(&mut self, o: StrokeSet) -> &SymbolVar {
        if !self.symbol_cache.contains_key(&o) {
            if self.grouping.is_none() {
                self.grouping = Some(self.symbols.grouping_context(self.obs));
            }
            let s = self
                .symbols
                .symbol_score(self.obs, o, self.grouping.as_ref().unwrap())
                .expect("non-empty subset");
            let max = s.scores.iter().copied().fold(0.0, f64::max);
            let total: f64 = s.scores.iter().sum();
            let var = SymbolVar {
                n: (s.grouping * max).ln_1p(),
                grouping: s.grouping,
                max,
                log_total: total.ln(),
                scores: s.scores,
            };
            self.symbol_cache.insert(o, var);
        }
        &self.symbol_cache[&o]
    }

    /// Symbol-variable distribution of a subset: (Pr(NIL), Pr(beta) in
    /// library symbol order).
    pub fn symbol_distribution(&mut self, o: StrokeSet) -> (f64, Vec<f64>) {
        let v = self.var(o);
        let nil = symbol_nil_probability(v.n);
        let mass = 1.0 - nil;
        let total = v.log_total.exp();
        (nil, v.scores.iter().map(|s| mass * s / total).collect())
    }

    /// Grouping score G(o).
    pub fn grouping(&mut self, o: StrokeSet) -> f64 {
        self.var(o).grouping
    }

    /// Updates the bag with every leaf subset of the forest and freezes the
    /// resulting prior for extraction.
    pub fn freeze_bag(&mut self, forest: &Forest) {
        self.bag.reset();
        if self.mode == ScoringMode::Default {
            let subsets: HashSet<StrokeSet> = forest
                .nodes()
                .iter()
                .filter(|n| matches!(n.kind, NodeKind::Leaf { .. }))
                .map(|n| n.subset)
                .collect();
            let mut subsets: Vec<StrokeSet> = subsets.into_iter().collect();
            subsets.sort();
            for o in subsets {
                let (_, dist) = self.symbol_distribution(o);
                for (i, p) in dist.into_iter().enumerate() {
                    let name = self.symbols.symbols()[i].clone();
                    self.bag.observe(&name, p);
                }
            }
        }
        self.log_bag = Some(self.bag_distribution().iter().map(|p| p.ln()).collect());
    }

    /// Current Pr(B = t) per grammar terminal.
    pub fn bag_distribution(&self) -> Vec<f64> {
        let names: Vec<&str> = self.grammar.terminals().iter().map(|t| t.name.as_str()).collect();
        self.bag.distribution(&names)
    }

    pub fn bag(&self) -> &SymbolBag {
        &self.bag
    }

    fn chain(&self, c: ClassKey) -> &[String] {
        match c {
            ClassKey::Terminal(t) => &self.chains[t.0 as usize],
            ClassKey::Expr => &self.expr_chain,
        }
    }

    fn features(&mut self, o1: StrokeSet, o2: StrokeSet) -> Features {
        let obs = self.obs;
        *self
            .feature_cache
            .entry((o1, o2))
            .or_insert_with(|| relations::relation_features(obs, o1, o2).expect("non-empty"))
    }

    /// log Pr(R = r | classes) for every relation, in `Relation::ALL` order.
    pub fn log_relation_distribution(&mut self, o1: StrokeSet, c1: ClassKey, o2: StrokeSet, c2: ClassKey) -> [f64; 5] {
        if let Some(d) = self.relation_cache.get(&(o1, o2, c1, c2)) {
            return *d;
        }
        let f = self.features(o1, o2);
        let scores = self
            .relations
            .classify(self.chain(c1), self.chain(c2), &f)
            .expect("relation model has a generic pair");
        let (_, d) = relations::log_relation_distribution(&scores.log_r);
        self.relation_cache.insert((o1, o2, c1, c2), d);
        d
    }

    /// log Pr(R = NIL | GEN, GEN): depends on the input only.
    pub fn log_nil_generic(&mut self, o1: StrokeSet, o2: StrokeSet) -> f64 {
        if let Some(&v) = self.nil_cache.get(&(o1, o2)) {
            return v;
        }
        let f = self.features(o1, o2);
        let scores = self
            .relations
            .classify(&self.gen_chain, &self.gen_chain, &f)
            .expect("relation model has a generic pair");
        let (nil, _) = relations::log_relation_distribution(&scores.log_r);
        self.nil_cache.insert((o1, o2), nil);
        nil
    }

    /// The class pair the relation model used for one relation of a query.
    pub fn relation_pair(
        &mut self,
        o1: StrokeSet,
        c1: ClassKey,
        o2: StrokeSet,
        c2: ClassKey,
        r: Relation,
    ) -> (String, String) {
        let f = self.features(o1, o2);
        self.relations
            .classify(self.chain(c1), self.chain(c2), &f)
            .expect("relation model has a generic pair")
            .pairs[r.index()]
            .clone()
    }

    /// log Pr(S_o = NIL | g, s): depends on the input only.
    pub fn log_symbol_nil(&mut self, o: StrokeSet) -> f64 {
        -self.var(o).n.ln_1p()
    }
}

impl Admission for InputScorer<'_> {
    fn admits(&mut self, o: StrokeSet, t: TerminalId) -> bool {
        if let ScoringMode::Perfect(groups) = &self.mode {
            let name = self.grammar.terminal_name(t);
            return groups.iter().any(|g| g.symbol == name && g.set() == o);
        }
        let Some(idx) = self.library_index[t.0 as usize] else {
            return false;
        };
        if o.len() > self.symbols.max_strokes() {
            return false;
        }
        let (min_g, rel) = (self.admission.min_grouping, self.admission.relative_score);
        let v = self.var(o);
        v.grouping > min_g && v.scores[idx] >= rel * v.max
    }
}

impl TreeScorer for InputScorer<'_> {
    fn terminal(&mut self, t: TerminalId, o: StrokeSet) -> TerminalFactor {
        if matches!(self.mode, ScoringMode::Perfect(_)) {
            return TerminalFactor { symbol: 0.0, bag: 0.0 };
        }
        if self.log_bag.is_none() {
            self.log_bag = Some(self.bag_distribution().iter().map(|p| p.ln()).collect());
        }
        let bag = self.log_bag.as_ref().unwrap()[t.0 as usize];
        let idx = self.library_index[t.0 as usize].expect("admitted terminals have templates");
        let v = self.var(o);
        TerminalFactor {
            symbol: v.n.ln() + v.scores[idx].ln() - v.log_total,
            bag,
        }
    }

    fn relation(&mut self, rel: Relation, o1: StrokeSet, c1: ClassKey, o2: StrokeSet, c2: ClassKey) -> f64 {
        let d = self.log_relation_distribution(o1, c1, o2, c2);
        d[rel.index()] - self.log_nil_generic(o1, o2)
    }
}
