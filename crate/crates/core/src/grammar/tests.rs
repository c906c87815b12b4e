use std::collections::{BTreeSet, HashMap};

use super::*;

#[test]
fn toy_grammar_shape() {
    let g = Grammar::toy();
    assert_eq!(g.nonterminals().len(), 10);
    for name in ["EXPR", "ADD", "FRAC", "TERM", "LEAD-TERM", "MULT", "SUP", "SYM", "VAR", "NUM"] {
        assert!(g.nonterminal_id(name).is_some(), "{name}");
    }
    assert_eq!(g.nonterminal_name(g.start()), "EXPR");
    assert!(g.terminal_id("P").is_some());
    assert_eq!(g.terminal(g.terminal_id("p").unwrap()).class, "Descender");
    assert!(!g.is_normalized());
}

#[test]
fn minimal_grammar() {
    let g = Grammar::parse("start S\nterminals a\nS -> a\n").unwrap();
    assert_eq!(g.productions().len(), 1);
    assert!(g.is_normalized());
}

#[test]
fn undeclared_symbol_is_rejected() {
    let e = Grammar::parse("start S\nterminals a\nS -> (right) a B\n").unwrap_err();
    match e {
        Error::Grammar { line, message } => {
            assert_eq!(line, 3);
            assert!(message.contains("`B`"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_start_is_rejected() {
    assert!(Grammar::parse("terminals a\nS -> a\n").is_err());
    assert!(Grammar::parse("start T\nterminals a\nS -> a\n").is_err());
}

#[test]
fn unit_cycle_is_rejected() {
    let e = Grammar::parse("start A\nterminals a\nA -> B | a\nB -> A\n").unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("unit cycle"), "{msg}");
    assert!(msg.contains("->"), "{msg}");
}

#[test]
fn unproductive_nonterminal_is_rejected() {
    let e = Grammar::parse("start A\nterminals a\nA -> (right) A A\n").unwrap_err();
    assert!(e.to_string().contains("derives no terminal"));
}

#[test]
fn relation_rules() {
    assert!(Grammar::parse("start A\nterminals a b\nA -> a b\n").is_err());
    assert!(Grammar::parse("start A\nterminals a b\nA -> (contain) a b a\n").is_err());
}

#[test]
fn relation_axes() {
    use Relation::*;
    assert_eq!(Right.axis(), Axis::X);
    assert_eq!(Super.axis(), Axis::X);
    assert_eq!(Contain.axis(), Axis::X);
    assert_eq!(Sub.axis(), Axis::Y);
    assert_eq!(Below.axis(), Axis::Y);
}

#[test]
fn normalize_wraps_inline_terminals() {
    let g = Grammar::toy().normalize();
    assert!(g.is_normalized());
    let add = g.nonterminal_id("ADD").unwrap();
    let (_, p) = g.productions_of(add).next().unwrap();
    let names: Vec<&str> = p.rhs.iter().map(|&s| g.symbol_name(s)).collect();
    assert_eq!(names, ["TERM", "ADD#1", "EXPR"]);
    let fresh = g.nonterminal_id("ADD#1").unwrap();
    assert!(g.nonterminals()[fresh.0 as usize].hidden);
    let (_, wrap) = g.productions_of(fresh).next().unwrap();
    assert!(wrap.is_terminal());
    assert_eq!(g.symbol_name(wrap.rhs[0]), "+");
}

#[test]
fn normalize_is_a_fixpoint_on_normal_grammars() {
    let g = Grammar::toy().normalize();
    assert_eq!(g.normalize(), g);
}

#[test]
fn dsl_round_trip() {
    for g in [Grammar::toy(), Grammar::crohme_like(), Grammar::toy().normalize()] {
        let text = g.render();
        let back = Grammar::parse(&text).unwrap();
        assert_eq!(back, g, "{text}");
    }
    let g = Grammar::parse("start S\nterminals a sqrt\ncontainer\nclass a Ascender\nS -> a | sqrt\n").unwrap();
    assert!(!g.terminal(g.terminal_id("sqrt").unwrap()).container);
    assert_eq!(Grammar::parse(&g.render()).unwrap(), g);
}

#[test]
fn sqrt_is_the_only_default_container() {
    let g = Grammar::crohme_like();
    let containers: Vec<&str> = g
        .terminals()
        .iter()
        .filter(|t| t.container)
        .map(|t| t.name.as_str())
        .collect();
    assert_eq!(containers, ["sqrt"]);
}

/// Brute-force enumeration of every representable expression with at most
/// `max_leaves` symbols, computed by fixpoint iteration over productions.
fn language(g: &Grammar, max_leaves: usize) -> BTreeSet<Expression> {
    let mut sets: HashMap<NonterminalId, BTreeSet<Expression>> = HashMap::new();
    loop {
        let mut changed = false;
        for p in g.productions() {
            let child_sets: Vec<Vec<Expression>> = p
                .rhs
                .iter()
                .map(|&s| match s {
                    Symbol::T(t) => vec![Expression::terminal(g.terminal_name(t))],
                    Symbol::N(n) => sets.get(&n).map(|s| s.iter().cloned().collect()).unwrap_or_default(),
                })
                .collect();
            let mut produced = Vec::new();
            if p.rhs.len() == 1 {
                produced = child_sets[0].clone();
            } else {
                let mut partial: Vec<Vec<Expression>> = vec![vec![]];
                for options in &child_sets {
                    let mut next = Vec::new();
                    for prefix in &partial {
                        let used: usize = prefix.iter().map(|e| e.symbol_count()).sum();
                        for o in options {
                            if used + o.symbol_count() <= max_leaves {
                                let mut v = prefix.clone();
                                v.push(o.clone());
                                next.push(v);
                            }
                        }
                    }
                    partial = next;
                }
                for children in partial {
                    produced.push(Expression::concat(p.relation.unwrap(), children));
                }
            }
            let entry = sets.entry(p.lhs).or_default();
            for e in produced {
                if e.symbol_count() <= max_leaves && entry.insert(e) {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    sets.remove(&g.start()).unwrap_or_default()
}

#[test]
fn normalize_preserves_the_representable_set() {
    let small_toy = "start EXPR\nterminals + - a b 1\n\
        EXPR -> ADD | TERM\nADD -> (right) TERM + EXPR\nTERM -> MULT | LEAD-TERM\n\
        LEAD-TERM -> SUP | FRAC | SYM\nMULT -> (right) LEAD-TERM TERM\n\
        FRAC -> (below) EXPR - EXPR\nSUP -> (super) SYM EXPR\nSYM -> VAR | NUM\n\
        VAR -> a | b\nNUM -> 1\n";
    let mixed = "start S\nterminals a b sqrt ( )\n\
        S -> (right) a S b | (contain) sqrt S | (right) ( S ) | a\n";
    for text in [small_toy, mixed] {
        let g = Grammar::parse(text).unwrap();
        let before = language(&g, 4);
        let after = language(&g.normalize(), 4);
        assert!(!before.is_empty());
        assert_eq!(before, after);
    }
}
