use std::collections::{BTreeMap, HashMap};

use super::{
    default_class, Grammar, NonterminalId, NonterminalInfo, Production, Relation, Symbol,
    TerminalId, TerminalInfo,
};
use crate::error::{Error, Result};

/// `#` starts a comment at the beginning of a line or after whitespace, so
/// generated names such as `ADD#1` survive.
fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Grammar {
        line,
        message: message.into(),
    })
}

/// Expands `a..z` style ranges in a `terminals` line.
fn expand_terminal(token: &str, line: usize) -> Result<Vec<String>> {
    let chars: Vec<char> = token.chars().collect();
    if chars.len() == 4 && chars[1] == '.' && chars[2] == '.' {
        let (lo, hi) = (chars[0], chars[3]);
        if lo > hi {
            return err(line, format!("empty terminal range {token}"));
        }
        return Ok((lo..=hi).map(|c| c.to_string()).collect());
    }
    Ok(vec![token.to_string()])
}

struct RawProduction {
    line: usize,
    lhs: String,
    relation: Option<Relation>,
    rhs: Vec<String>,
}

pub(super) fn parse(text: &str) -> Result<Grammar> {
    let mut start: Option<(usize, String)> = None;
    let mut terminal_names: Vec<String> = Vec::new();
    let mut containers: Vec<(usize, String)> = Vec::new();
    let mut containers_declared = false;
    let mut classes: Vec<(usize, String, String)> = Vec::new();
    let mut raw: Vec<RawProduction> = Vec::new();

    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(full_line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some((lhs, rhs)) = line.split_once("->") {
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return err(line_no, format!("bad left-hand side `{lhs}`"));
            }
            for alt in rhs.split('|') {
                let mut tokens = alt.split_whitespace().peekable();
                let mut relation = None;
                if let Some(tok) = tokens.peek() {
                    if tok.starts_with('(') && tok.ends_with(')') && tok.len() > 2 {
                        let name = &tok[1..tok.len() - 1];
                        if let Some(r) = Relation::from_name(name) {
                            relation = Some(r);
                            tokens.next();
                        }
                    }
                }
                let rhs: Vec<String> = tokens.map(str::to_string).collect();
                if rhs.is_empty() {
                    return err(line_no, format!("empty alternative for {lhs}"));
                }
                if relation.is_none() && rhs.len() == 1 {
                    let expanded = expand_terminal(&rhs[0], line_no)?;
                    if expanded.len() > 1 {
                        for name in expanded {
                            raw.push(RawProduction {
                                line: line_no,
                                lhs: lhs.to_string(),
                                relation: None,
                                rhs: vec![name],
                            });
                        }
                        continue;
                    }
                }
                raw.push(RawProduction {
                    line: line_no,
                    lhs: lhs.to_string(),
                    relation,
                    rhs,
                });
            }
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next().unwrap() {
            "start" => {
                let name = words.next().map(str::to_string);
                match name {
                    Some(n) => start = Some((line_no, n)),
                    None => return err(line_no, "`start` needs a symbol"),
                }
            }
            "terminals" => {
                for w in words {
                    terminal_names.extend(expand_terminal(w, line_no)?);
                }
            }
            "container" => {
                containers_declared = true;
                containers.extend(words.map(|w| (line_no, w.to_string())));
            }
            "class" => {
                let (Some(t), Some(c), None) = (words.next(), words.next(), words.next()) else {
                    return err(line_no, "expected `class <terminal> <label>`");
                };
                classes.push((line_no, t.to_string(), c.to_string()));
            }
            other => return err(line_no, format!("unknown directive `{other}`")),
        }
    }

    let Some((start_line, start_name)) = start else {
        return err(0, "no start symbol declared");
    };

    let mut terminals: Vec<TerminalInfo> = Vec::new();
    let mut t_index: HashMap<String, TerminalId> = HashMap::new();
    for name in terminal_names {
        if t_index.contains_key(&name) {
            continue;
        }
        t_index.insert(name.clone(), TerminalId(terminals.len() as u16));
        terminals.push(TerminalInfo {
            container: name == "sqrt",
            class: default_class(&name).to_string(),
            name,
        });
    }
    if containers_declared {
        for t in terminals.iter_mut() {
            t.container = false;
        }
    }
    for (line, name) in containers {
        match t_index.get(&name) {
            Some(&t) => terminals[t.0 as usize].container = true,
            None => return err(line, format!("container `{name}` is not a declared terminal")),
        }
    }
    for (line, name, class) in classes {
        match t_index.get(&name) {
            Some(&t) => terminals[t.0 as usize].class = class,
            None => return err(line, format!("class for undeclared terminal `{name}`")),
        }
    }

    let mut nonterminals: Vec<NonterminalInfo> = Vec::new();
    let mut n_index: HashMap<String, NonterminalId> = HashMap::new();
    for p in &raw {
        if t_index.contains_key(&p.lhs) {
            return err(p.line, format!("terminal `{}` used as a left-hand side", p.lhs));
        }
        if !n_index.contains_key(&p.lhs) {
            n_index.insert(p.lhs.clone(), NonterminalId(nonterminals.len() as u16));
            nonterminals.push(NonterminalInfo {
                hidden: p.lhs.contains('#'),
                name: p.lhs.clone(),
            });
        }
    }
    let Some(&start) = n_index.get(&start_name) else {
        return err(start_line, format!("start symbol `{start_name}` has no productions"));
    };

    let mut productions = Vec::with_capacity(raw.len());
    for p in &raw {
        let mut rhs = Vec::with_capacity(p.rhs.len());
        for s in &p.rhs {
            let sym = match (n_index.get(s), t_index.get(s)) {
                (Some(&n), _) => Symbol::N(n),
                (None, Some(&t)) => Symbol::T(t),
                (None, None) => {
                    return err(
                        p.line,
                        format!("undeclared symbol `{s}` in production for {}", p.lhs),
                    )
                }
            };
            rhs.push(sym);
        }
        productions.push(Production {
            lhs: n_index[&p.lhs],
            relation: p.relation,
            rhs,
        });
    }

    let g = Grammar::from_parts(terminals, nonterminals, start, productions);
    g.validate().map_err(|e| match e {
        Error::Grammar { message, .. } => {
            // point at the first production mentioned in the message, if any
            let line = raw
                .iter()
                .find(|p| message.contains(&format!("`{} ->", p.lhs)))
                .map_or(0, |p| p.line);
            Error::Grammar { line, message }
        }
        other => other,
    })?;
    Ok(g)
}

pub(super) fn render(g: &Grammar) -> String {
    let mut out = String::new();
    out.push_str(&format!("start {}\n", g.nonterminal_name(g.start())));
    let names: Vec<&str> = g.terminals().iter().map(|t| t.name.as_str()).collect();
    for chunk in names.chunks(16) {
        out.push_str("terminals ");
        out.push_str(&chunk.join(" "));
        out.push('\n');
    }
    let containers: Vec<&str> = g
        .terminals()
        .iter()
        .filter(|t| t.container)
        .map(|t| t.name.as_str())
        .collect();
    out.push_str(&format!("container {}\n", containers.join(" ")).replace(" \n", "\n"));
    for t in g.terminals() {
        if t.class != default_class(&t.name) {
            out.push_str(&format!("class {} {}\n", t.name, t.class));
        }
    }
    // group productions by lhs in first-appearance order
    let mut order: Vec<NonterminalId> = Vec::new();
    let mut by_lhs: BTreeMap<NonterminalId, Vec<String>> = BTreeMap::new();
    for p in g.productions() {
        let mut alt = String::new();
        if let Some(r) = p.relation {
            alt.push_str(&format!("({r}) "));
        }
        let rhs: Vec<&str> = p.rhs.iter().map(|&s| g.symbol_name(s)).collect();
        alt.push_str(&rhs.join(" "));
        if !by_lhs.contains_key(&p.lhs) {
            order.push(p.lhs);
        }
        by_lhs.entry(p.lhs).or_default().push(alt);
    }
    for lhs in order {
        out.push_str(&format!(
            "{} -> {}\n",
            g.nonterminal_name(lhs),
            by_lhs[&lhs].join(" | ")
        ));
    }
    out
}
