//! Relational context-free grammars.
//!
//! A production `A -> (r) A1 ... Ak` requires every adjacent pair of its
//! right-hand side to satisfy the spatial relation `r`. Grammars are written
//! in a small line-oriented DSL (see [`Grammar::parse`]) and normalized so
//! that every production is either terminal (`A -> a`) or purely
//! nonterminal.

mod dsl;
mod expr;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use expr::{Expression, RenderStyle};

use crate::error::{Error, Result};

/// The toy grammar: sums, implicit products, fractions and superscripts over
/// single letters and digits.
pub const TOY_GRAMMAR: &str = include_str!("../../fixtures/toy.grammar");

/// A fuller grammar with subtraction, subscripts, roots and parentheses.
pub const CROHME_LIKE_GRAMMAR: &str = include_str!("../../fixtures/crohme_like.grammar");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Right,
    Super,
    Sub,
    Below,
    Contain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::Right,
        Relation::Super,
        Relation::Sub,
        Relation::Below,
        Relation::Contain,
    ];

    pub fn axis(self) -> Axis {
        match self {
            Relation::Right | Relation::Super | Relation::Contain => Axis::X,
            Relation::Sub | Relation::Below => Axis::Y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Right => "right",
            Relation::Super => "super",
            Relation::Sub => "sub",
            Relation::Below => "below",
            Relation::Contain => "contain",
        }
    }

    pub fn from_name(s: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NonterminalId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    T(TerminalId),
    N(NonterminalId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: NonterminalId,
    pub relation: Option<Relation>,
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn is_terminal(&self) -> bool {
        self.rhs.len() == 1 && matches!(self.rhs[0], Symbol::T(_))
    }

    /// A single nonterminal on the right and no relation.
    pub fn is_unit(&self) -> bool {
        self.rhs.len() == 1 && matches!(self.rhs[0], Symbol::N(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalInfo {
    pub name: String,
    pub container: bool,
    /// Stereotype label used by the relation classifier (e.g. `Baseline`).
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonterminalInfo {
    pub name: String,
    /// Introduced by normalization; never shown to users.
    pub hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    terminals: Vec<TerminalInfo>,
    nonterminals: Vec<NonterminalInfo>,
    start: NonterminalId,
    productions: Vec<Production>,
    terminal_index: HashMap<String, TerminalId>,
    nonterminal_index: HashMap<String, NonterminalId>,
}

/// Default relational stereotype of a terminal symbol.
pub fn default_class(symbol: &str) -> &'static str {
    match symbol {
        "i" => "i",
        "j" => "j",
        "sqrt" => "Root",
        "int" => "Large-Extender",
        "-" => "Horizontal",
        "+" | "=" => "Centered",
        "(" | ")" | "[" | "]" => "Extender",
        "." | "," | "'" => "Punctuation",
        s if s.chars().count() == 1 => {
            let c = s.chars().next().unwrap();
            match c {
                'b' | 'd' | 'f' | 'h' | 'k' | 'l' | 't' => "Ascender",
                'g' | 'p' | 'q' | 'y' => "Descender",
                c if c.is_ascii_lowercase() => "Baseline",
                c if c.is_ascii_uppercase() || c.is_ascii_digit() => "Ascender",
                _ => "Baseline",
            }
        }
        _ => "Baseline",
    }
}

impl Grammar {
    /// Parses and validates grammar DSL text.
    ///
    /// ```text
    /// start EXPR
    /// terminals a..z 0..9 +
    /// container sqrt
    /// class p Descender
    /// EXPR -> ADD | TERM
    /// ADD -> (right) TERM + EXPR
    /// ```
    pub fn parse(text: &str) -> Result<Grammar> {
        dsl::parse(text)
    }

    pub fn toy() -> Grammar {
        Grammar::parse(TOY_GRAMMAR).expect("bundled toy grammar is valid")
    }

    pub fn crohme_like() -> Grammar {
        Grammar::parse(CROHME_LIKE_GRAMMAR).expect("bundled grammar is valid")
    }

    /// Serializes back into the DSL; `parse(render(g)) == g`.
    pub fn render(&self) -> String {
        dsl::render(self)
    }

    pub(crate) fn from_parts(
        terminals: Vec<TerminalInfo>,
        nonterminals: Vec<NonterminalInfo>,
        start: NonterminalId,
        productions: Vec<Production>,
    ) -> Grammar {
        let terminal_index = terminals
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.clone(), TerminalId(i as u16)))
            .collect();
        let nonterminal_index = nonterminals
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), NonterminalId(i as u16)))
            .collect();
        Grammar {
            terminals,
            nonterminals,
            start,
            productions,
            terminal_index,
            nonterminal_index,
        }
    }

    pub fn start(&self) -> NonterminalId {
        self.start
    }

    pub fn terminals(&self) -> &[TerminalInfo] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[NonterminalInfo] {
        &self.nonterminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProductionId) -> &Production {
        &self.productions[id.0 as usize]
    }

    pub fn terminal(&self, id: TerminalId) -> &TerminalInfo {
        &self.terminals[id.0 as usize]
    }

    pub fn terminal_name(&self, id: TerminalId) -> &str {
        &self.terminals[id.0 as usize].name
    }

    pub fn nonterminal_name(&self, id: NonterminalId) -> &str {
        &self.nonterminals[id.0 as usize].name
    }

    pub fn terminal_id(&self, name: &str) -> Option<TerminalId> {
        self.terminal_index.get(name).copied()
    }

    pub fn nonterminal_id(&self, name: &str) -> Option<NonterminalId> {
        self.nonterminal_index.get(name).copied()
    }

    pub fn terminal_ids(&self) -> impl Iterator<Item = TerminalId> {
        (0..self.terminals.len()).map(|i| TerminalId(i as u16))
    }

    pub fn productions_of(&self, lhs: NonterminalId) -> impl Iterator<Item = (ProductionId, &Production)> {
        self.productions
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.lhs == lhs)
            .map(|(i, p)| (ProductionId(i as u32), p))
    }

    pub fn symbol_name(&self, s: Symbol) -> &str {
        match s {
            Symbol::T(t) => self.terminal_name(t),
            Symbol::N(n) => self.nonterminal_name(n),
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.productions
            .iter()
            .all(|p| p.is_terminal() || p.rhs.iter().all(|s| matches!(s, Symbol::N(_))))
    }

    /// Rewrites mixed productions so that each is either `A -> a` or
    /// `A -> (r) A1 .. Ak` over nonterminals only. Inline terminals are
    /// wrapped in fresh hidden nonterminals named `LHS#i`.
    pub fn normalize(&self) -> Grammar {
        let mut nonterminals = self.nonterminals.clone();
        let mut productions = Vec::with_capacity(self.productions.len());
        let mut extra = Vec::new();
        let mut fresh_count: HashMap<NonterminalId, usize> = HashMap::new();
        for p in &self.productions {
            if p.is_terminal() || p.rhs.iter().all(|s| matches!(s, Symbol::N(_))) {
                productions.push(p.clone());
                continue;
            }
            let mut rhs = Vec::with_capacity(p.rhs.len());
            for &s in &p.rhs {
                match s {
                    Symbol::N(_) => rhs.push(s),
                    Symbol::T(t) => {
                        let count = fresh_count.entry(p.lhs).or_insert(0);
                        *count += 1;
                        let mut name = format!("{}#{}", self.nonterminal_name(p.lhs), count);
                        while self.nonterminal_index.contains_key(&name) {
                            *count += 1;
                            name = format!("{}#{}", self.nonterminal_name(p.lhs), count);
                        }
                        let id = NonterminalId(nonterminals.len() as u16);
                        nonterminals.push(NonterminalInfo { name, hidden: true });
                        extra.push(Production {
                            lhs: id,
                            relation: None,
                            rhs: vec![Symbol::T(t)],
                        });
                        rhs.push(Symbol::N(id));
                    }
                }
            }
            productions.push(Production {
                lhs: p.lhs,
                relation: p.relation,
                rhs,
            });
        }
        productions.extend(extra);
        Grammar::from_parts(self.terminals.clone(), nonterminals, self.start, productions)
    }

    /// Structural checks shared by the parser and by hand-built grammars.
    pub(crate) fn validate(&self) -> Result<()> {
        let err = |message: String| Err(Error::Grammar { line: 0, message });
        for (i, p) in self.productions.iter().enumerate() {
            let shown = self.production_text(ProductionId(i as u32));
            match (p.relation, p.rhs.len()) {
                (None, 1) => {}
                (None, _) => return err(format!("production `{shown}` needs a relation")),
                (Some(_), 0 | 1) => {
                    return err(format!("production `{shown}` has a relation but one symbol"))
                }
                (Some(Relation::Contain), k) if k != 2 => {
                    return err(format!("containment production `{shown}` must be binary"))
                }
                _ => {}
            }
        }
        if self.productions_of(self.start).next().is_none() {
            return err(format!(
                "start symbol {} has no productions",
                self.nonterminal_name(self.start)
            ));
        }
        // unit cycles would make the parser revisit the same (A, o) forever
        let n = self.nonterminals.len();
        let mut state = vec![0u8; n];
        fn visit(g: &Grammar, a: usize, state: &mut [u8]) -> std::result::Result<(), ProductionId> {
            state[a] = 1;
            for (pid, p) in g.productions_of(NonterminalId(a as u16)) {
                if let (true, Symbol::N(b)) = (p.is_unit(), p.rhs[0]) {
                    let b = b.0 as usize;
                    if state[b] == 1 {
                        return Err(pid);
                    }
                    if state[b] == 0 {
                        visit(g, b, state)?;
                    }
                }
            }
            state[a] = 2;
            Ok(())
        }
        for a in 0..n {
            if state[a] == 0 {
                if let Err(pid) = visit(self, a, &mut state) {
                    return err(format!("unit cycle through `{}`", self.production_text(pid)));
                }
            }
        }
        // every reachable nonterminal must derive some terminal string
        let mut productive = vec![false; n];
        loop {
            let mut changed = false;
            for p in &self.productions {
                let lhs = p.lhs.0 as usize;
                if !productive[lhs]
                    && p.rhs.iter().all(|s| match s {
                        Symbol::T(_) => true,
                        Symbol::N(b) => productive[b.0 as usize],
                    })
                {
                    productive[lhs] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut reachable = vec![false; n];
        let mut stack = vec![self.start];
        reachable[self.start.0 as usize] = true;
        while let Some(a) = stack.pop() {
            for (_, p) in self.productions_of(a) {
                for s in &p.rhs {
                    if let Symbol::N(b) = s {
                        if !reachable[b.0 as usize] {
                            reachable[b.0 as usize] = true;
                            stack.push(*b);
                        }
                    }
                }
            }
        }
        for a in 0..n {
            if reachable[a] && !productive[a] {
                return err(format!(
                    "nonterminal {} derives no terminal string",
                    self.nonterminals[a].name
                ));
            }
        }
        Ok(())
    }

    pub fn production_text(&self, id: ProductionId) -> String {
        let p = self.production(id);
        let mut s = format!("{} ->", self.nonterminal_name(p.lhs));
        if let Some(r) = p.relation {
            s.push_str(&format!(" ({r})"));
        }
        for &sym in &p.rhs {
            s.push(' ');
            s.push_str(self.symbol_name(sym));
        }
        s
    }
}

#[cfg(test)]
mod tests;
