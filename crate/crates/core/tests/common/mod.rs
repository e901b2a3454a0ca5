#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use tlr::grammar::{parse_grammar_text, Grammar, Production, Symbol};
use tlr::lr1::{Action, ParseStack, ParseTables};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn grammar(name: &str) -> Grammar {
    parse_grammar_text(&fixture(name)).unwrap()
}

pub fn g_ex() -> Grammar {
    grammar("g_ex.tlr")
}

pub fn g_naive() -> Grammar {
    grammar("g_naive.tlr")
}

pub fn syms(g: &Grammar, s: &str) -> Vec<Symbol> {
    g.symbol_string(s).unwrap()
}

/// `"A -> x y"` resolved against `g`.
pub fn prod(g: &Grammar, s: &str) -> Production {
    let (h, b) = s.split_once("->").unwrap();
    Production::new(Symbol::nonterminal(h.trim()), syms(g, b))
}

/// Earley recognizer, independent of the LR machinery.
pub fn earley(g: &Grammar, input: &[Symbol]) -> bool {
    // Items are (production index, dot, origin); index usize::MAX is the start item.
    let prods = g.productions();
    let start = Production::new(Symbol::accept(), vec![g.start().clone()]);
    let body = |p: usize| if p == usize::MAX { &start.body } else { &prods[p].body };
    let head = |p: usize| if p == usize::MAX { &start.head } else { &prods[p].head };
    let n = input.len();
    let mut sets: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n + 1];
    let mut seen: Vec<BTreeSet<(usize, usize, usize)>> = vec![BTreeSet::new(); n + 1];
    let add =
        |sets: &mut Vec<Vec<(usize, usize, usize)>>, seen: &mut Vec<BTreeSet<(usize, usize, usize)>>, k: usize, it| {
            if seen[k].insert(it) {
                sets[k].push(it);
            }
        };
    add(&mut sets, &mut seen, 0, (usize::MAX, 0, 0));
    for k in 0..=n {
        let mut i = 0;
        while i < sets[k].len() {
            let (p, dot, origin) = sets[k][i];
            i += 1;
            match body(p).get(dot) {
                Some(x) if x.is_nonterminal() => {
                    for (q, r) in prods.iter().enumerate() {
                        if &r.head == x {
                            add(&mut sets, &mut seen, k, (q, 0, k));
                        }
                    }
                    // Nullable completion already present in this set.
                    let done: Vec<_> = sets[k]
                        .iter()
                        .filter(|&&(q, d, o)| o == k && d == body(q).len() && head(q) == x)
                        .copied()
                        .collect();
                    if !done.is_empty() {
                        add(&mut sets, &mut seen, k, (p, dot + 1, origin));
                    }
                }
                Some(x) => {
                    if k < n && &input[k] == x {
                        add(&mut sets, &mut seen, k + 1, (p, dot + 1, origin));
                    }
                }
                None => {
                    let h = head(p).clone();
                    let parents: Vec<_> =
                        sets[origin].iter().filter(|&&(q, d, _)| body(q).get(d) == Some(&h)).copied().collect();
                    for (q, d, o) in parents {
                        add(&mut sets, &mut seen, k, (q, d + 1, o));
                    }
                }
            }
        }
    }
    sets[n].iter().any(|&(p, dot, origin)| p == usize::MAX && dot == 1 && origin == 0)
}

/// A bare table-driven LR(1) recognizer over the canonical tables.
pub fn lr_accepts(t: &ParseTables, input: &[Symbol]) -> bool {
    let mut stack = ParseStack::new();
    let mut toks = input.iter().cloned().chain([Symbol::end()]);
    let mut a = toks.next().unwrap();
    loop {
        match t.action(stack.top_state(), &a) {
            Action::Shift(s) => {
                stack.push(s, a.clone());
                a = toks.next().unwrap();
            }
            Action::Reduce(p) => {
                let prod = t.index().production(p).clone();
                stack.pop(prod.body.len());
                let s = t.goto(stack.top_state(), &prod.head).unwrap();
                stack.push(s, prod.head);
            }
            Action::Accept => return true,
            Action::Error => return false,
        }
    }
}

/// All strings over the grammar's terminals of length at most `max_len`.
pub fn strings(g: &Grammar, max_len: usize) -> Vec<Vec<Symbol>> {
    let ts: Vec<Symbol> = g.terminals().iter().filter(|t| !t.is_end()).cloned().collect();
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for t in &ts {
                let mut v: Vec<Symbol> = w.clone();
                v.push(t.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}
