use std::collections::HashMap;

use super::*;
use crate::ink::Point;

fn boxes(spec: &[(f64, f64, f64, f64)]) -> Observable {
    Observable::from_points(
        spec.iter()
            .map(|&(l, r, t, b)| vec![Point::new(l, t), Point::new(r, b)])
            .collect(),
    )
    .unwrap()
}

fn set(ids: &[usize]) -> StrokeSet {
    ids.iter().copied().collect()
}

#[test]
fn minimal_parse_is_one_chain() {
    let g = Grammar::parse("start S\nterminals a\nS -> a\n").unwrap();
    let obs = boxes(&[(0.0, 1.0, 0.0, 1.0)]);
    let a = g.terminal_id("a").unwrap();
    let mut admit = |_: StrokeSet, t: TerminalId| t == a;
    let f = Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap();
    let root = f.node(f.root().unwrap());
    assert!(matches!(root.kind, NodeKind::OrNt { .. }));
    let prod = f.node(root.children[0]);
    assert!(matches!(prod.kind, NodeKind::OrProd { .. }));
    assert_eq!(f.node(prod.children[0]).kind, NodeKind::Leaf { terminal: a });
    assert_eq!(f.stats().subsets_examined, 1);
    assert_eq!(f.stats().and_nodes, 0);
    assert_eq!(f.nodes().len(), 3);
}

#[test]
fn failure_has_no_and_nodes() {
    let g = Grammar::toy().normalize();
    let obs = boxes(&[(0.0, 1.0, 0.0, 1.0), (2.0, 3.0, 0.0, 1.0)]);
    let mut none = |_: StrokeSet, _: TerminalId| false;
    let f = Forest::build(&obs, &g, &mut none, &ForestConfig::unpruned()).unwrap();
    assert!(f.root().is_none());
    assert_eq!(f.stats().and_nodes, 0);
    assert_eq!(f.dump(&g), "(no parse)\n");
}

/// The two-reading example: a P/p stroke, a two-stroke x, a two-stroke +
/// and an a, with the last three raised and shrunk.
fn fig3() -> (Observable, HashMap<StrokeSet, Vec<&'static str>>) {
    let obs = boxes(&[
        (0.0, 1.0, 0.0, 2.0),
        (1.3, 1.8, -0.6, 0.0),
        (1.3, 1.8, 0.0, -0.6),
        (2.0, 2.6, -0.3, -0.3),
        (2.3, 2.3, -0.6, 0.0),
        (2.9, 3.4, -0.6, 0.0),
    ]);
    let mut lex = HashMap::new();
    lex.insert(set(&[0]), vec!["p", "P"]);
    lex.insert(set(&[1, 2]), vec!["x"]);
    lex.insert(set(&[3, 4]), vec!["+"]);
    lex.insert(set(&[5]), vec!["a"]);
    (obs, lex)
}

fn lexicon_admission<'a>(g: &'a Grammar, lex: &'a HashMap<StrokeSet, Vec<&'static str>>) -> impl FnMut(StrokeSet, TerminalId) -> bool + 'a {
    move |o, t| lex.get(&o).is_some_and(|names| names.contains(&g.terminal_name(t)))
}

#[test]
fn both_readings_of_the_two_reading_example() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let mut admit = lexicon_admission(&g, &lex);
    let f = Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap();
    let latex: Vec<String> = f
        .expressions(&g, f.root().unwrap())
        .iter()
        .map(|e| e.to_latex())
        .collect();
    assert!(latex.contains(&"P^{x+a}".to_string()), "{latex:?}");
    assert!(latex.contains(&"px+a".to_string()), "{latex:?}");
    let dump = f.dump(&g);
    assert!(dump.contains("or SUP") && dump.contains("or ADD"), "{dump}");
}

#[test]
fn and_children_partition_their_subset() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let mut admit = lexicon_admission(&g, &lex);
    let f = Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap();
    for n in f.nodes() {
        match n.kind {
            NodeKind::And { production } => {
                assert_eq!(n.children.len(), g.production(production).rhs.len());
                let mut acc = StrokeSet::empty();
                for &c in &n.children {
                    let part = f.node(c).subset;
                    assert!(!part.is_empty() && acc.is_disjoint(part));
                    assert!(matches!(f.node(c).kind, NodeKind::OrNt { .. }));
                    acc = acc.union(part);
                }
                assert_eq!(acc, n.subset);
            }
            NodeKind::OrNt { .. } | NodeKind::OrProd { .. } => {
                assert!(!n.children.is_empty());
                assert!(n.children.iter().all(|&c| f.node(c).subset == n.subset));
            }
            NodeKind::Leaf { .. } => assert!(n.children.is_empty()),
        }
    }
}

#[test]
fn admission_is_asked_once_per_subset_and_terminal() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let mut calls: HashMap<(StrokeSet, TerminalId), usize> = HashMap::new();
    let mut admit = |o: StrokeSet, t: TerminalId| {
        *calls.entry((o, t)).or_default() += 1;
        lex.get(&o).is_some_and(|n| n.contains(&g.terminal_name(t)))
    };
    Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap();
    assert!(calls.values().all(|&c| c == 1));
}

#[test]
fn builds_are_deterministic() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let build = || {
        let mut admit = lexicon_admission(&g, &lex);
        Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap()
    };
    let (a, b) = (build(), build());
    assert_eq!(a.nodes(), b.nodes());
    assert_eq!(a.root(), b.root());
}

#[test]
fn complexity_cap_is_an_error() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let mut admit = lexicon_admission(&g, &lex);
    let cfg = ForestConfig { max_entries: 20, ..ForestConfig::unpruned() };
    let e = Forest::build(&obs, &g, &mut admit, &cfg).unwrap_err();
    assert!(matches!(e, Error::ComplexityLimit { cap: 20 }));
}

#[test]
fn find_locates_or_nodes() {
    let g = Grammar::toy().normalize();
    let (obs, lex) = fig3();
    let mut admit = lexicon_admission(&g, &lex);
    let f = Forest::build(&obs, &g, &mut admit, &ForestConfig::unpruned()).unwrap();
    let expr = g.nonterminal_id("EXPR").unwrap();
    assert_eq!(f.find(expr, obs.all()), f.root());
    let id = f.find(expr, set(&[1, 2, 3, 4, 5])).unwrap();
    let latex: Vec<String> = f.expressions(&g, id).iter().map(|e| e.to_latex()).collect();
    assert!(latex.contains(&"x+a".to_string()));
    assert!(f.find(expr, set(&[0, 5])).is_none());
}
