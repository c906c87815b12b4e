//! Symbol-bag prior: which symbols tend to appear together.
//!
//! Counts file format, one record per line, `#` comments allowed:
//!
//! ```text
//! r x 120
//! c x 2 45
//! ```
//!
//! `r` lines give the number of expressions containing a symbol, `c` lines
//! the number containing both symbols (order irrelevant).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolBag {
    occurrence: BTreeMap<String, f64>,
    cooccurrence: BTreeMap<(String, String), f64>,
    best: BTreeMap<String, f64>,
}

fn pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SymbolBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_occurrence(&mut self, sym: &str, n: f64) {
        *self.occurrence.entry(sym.to_string()).or_default() += n;
    }

    pub fn add_cooccurrence(&mut self, a: &str, b: &str, n: f64) {
        *self.cooccurrence.entry(pair(a, b)).or_default() += n;
    }

    /// Counts one expression's symbols: each distinct symbol once, each
    /// unordered pair of distinct symbols once, and a symbol with itself
    /// when it appears more than once.
    pub fn count_expression(&mut self, symbols: &[&str]) {
        let mut distinct: Vec<&str> = symbols.to_vec();
        distinct.sort();
        distinct.dedup();
        for (i, a) in distinct.iter().enumerate() {
            self.add_occurrence(a, 1.0);
            if symbols.iter().filter(|s| *s == a).count() > 1 {
                self.add_cooccurrence(a, a, 1.0);
            }
            for b in &distinct[i + 1..] {
                self.add_cooccurrence(a, b, 1.0);
            }
        }
    }

    pub fn occurrence(&self, sym: &str) -> f64 {
        self.occurrence.get(sym).copied().unwrap_or(0.0)
    }

    pub fn cooccurrence(&self, a: &str, b: &str) -> f64 {
        self.cooccurrence.get(&pair(a, b)).copied().unwrap_or(0.0)
    }

    /// Forgets all observed evidence.
    pub fn reset(&mut self) {
        self.best.clear();
    }

    /// Records that some group was read as `sym` with probability `p`; only
    /// the largest observation per symbol matters.
    pub fn observe(&mut self, sym: &str, p: f64) {
        let e = self.best.entry(sym.to_string()).or_insert(0.0);
        if p > *e {
            *e = p;
        }
    }

    pub fn best(&self, sym: &str) -> f64 {
        self.best.get(sym).copied().unwrap_or(0.0)
    }

    /// r(a) + sum over observed b of best(b) c(a, b) / r(b).
    pub fn weight(&self, sym: &str) -> f64 {
        let mut w = self.occurrence(sym);
        for (b, &p) in &self.best {
            let r = self.occurrence(b);
            if r > 0.0 && p > 0.0 {
                w += p * self.cooccurrence(sym, b) / r;
            }
        }
        w
    }

    /// Pr(B = sym) over the given terminal alphabet, smoothed.
    pub fn distribution(&self, alphabet: &[&str]) -> Vec<f64> {
        let w: Vec<f64> = alphabet.iter().map(|a| self.weight(a) + SMOOTHING).collect();
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, n) in &self.occurrence {
            out.push_str(&format!("r {s} {n}\n"));
        }
        for ((a, b), n) in &self.cooccurrence {
            out.push_str(&format!("c {a} {b} {n}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut bag = SymbolBag::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Model(format!("bag counts line {}: `{line}`", i + 1));
            let num = |s: &str| s.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite());
            match f.as_slice() {
                ["r", s, n] => bag.add_occurrence(s, num(n).ok_or_else(bad)?),
                ["c", a, b, n] => bag.add_cooccurrence(a, b, num(n).ok_or_else(bad)?),
                _ => return Err(bad()),
            }
        }
        Ok(bag)
    }
}
