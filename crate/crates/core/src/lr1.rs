//! Canonical LR(1) machinery: FIRST sets, item sets, action/goto tables and
//! restacking a symbol string by folding goto from state 0.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::grammar::{Grammar, Production, Symbol};

/// A set of terminal indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TermSet {
    bits: Vec<u64>,
}

impl TermSet {
    pub fn with_capacity(n: usize) -> Self {
        TermSet { bits: vec![0; n.div_ceil(64)] }
    }

    pub fn insert(&mut self, t: usize) -> bool {
        let (w, b) = (t / 64, 1u64 << (t % 64));
        if w >= self.bits.len() {
            self.bits.resize(w + 1, 0);
        }
        let fresh = self.bits[w] & b == 0;
        self.bits[w] |= b;
        fresh
    }

    pub fn contains(&self, t: usize) -> bool {
        self.bits.get(t / 64).is_some_and(|w| w & (1u64 << (t % 64)) != 0)
    }

    /// Adds every member of `other`; reports whether anything changed.
    pub fn union_with(&mut self, other: &TermSet) -> bool {
        if other.bits.len() > self.bits.len() {
            self.bits.resize(other.bits.len(), 0);
        }
        let mut changed = false;
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            let n = *a | *b;
            changed |= n != *a;
            *a = n;
        }
        changed
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .flat_map(|(w, bits)| (0..64).filter(move |b| bits & (1u64 << b) != 0).map(move |b| w * 64 + b))
    }
}

/// FIRST of a symbol string: the terminals that can begin it, and whether it derives ε.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstSet {
    pub terminals: BTreeSet<Symbol>,
    pub epsilon: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Lr1Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("grammar is not LR(1): {}", .0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "))]
    NotLr1(Vec<Conflict>),
    #[error("not a viable prefix: goto undefined at symbol {position}")]
    NotAViablePrefix { position: usize },
}

/// One side of a table conflict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Contender {
    Shift,
    Reduce(Production),
}

impl fmt::Display for Contender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contender::Shift => f.write_str("shift"),
            Contender::Reduce(p) => write!(f, "reduce {p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub state: usize,
    pub terminal: Symbol,
    pub contenders: Vec<Contender>,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.contenders.iter().map(|c| c.to_string()).collect();
        write!(f, "state {} on `{}`: {}", self.state, self.terminal, c.join(" vs "))
    }
}

/// An LR(1) item `[A -> α · β, a]` over a [`GrammarIndex`]'s numbering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item {
    pub production: usize,
    pub dot: usize,
    pub lookahead: usize,
}

/// A closed item set, items kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ItemSet {
    pub id: usize,
    pub items: Vec<Item>,
}

impl ItemSet {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: &Item) -> bool {
        self.items.binary_search(item).is_ok()
    }
}

/// A grammar with its symbols and productions numbered, plus nullable and
/// FIRST sets. Terminals (including `$end`) come first in symbol order, then
/// nonterminals, then `$accept`. Production 0 is `$accept -> S`.
#[derive(Clone, Debug)]
pub struct GrammarIndex {
    grammar: Grammar,
    symbols: Vec<Symbol>,
    n_terms: usize,
    end: usize,
    lookup: HashMap<Symbol, usize>,
    productions: Vec<Production>,
    heads: Vec<usize>,
    bodies: Vec<Vec<usize>>,
    by_head: Vec<Vec<usize>>,
    transformative: Vec<bool>,
    nullable: Vec<bool>,
    first: Vec<TermSet>,
}

impl GrammarIndex {
    pub fn new(g: &Grammar) -> Self {
        let mut symbols: Vec<Symbol> = g.terminals().iter().cloned().collect();
        let n_terms = symbols.len();
        symbols.extend(g.nonterminals().iter().cloned());
        symbols.push(Symbol::accept());
        let lookup: HashMap<Symbol, usize> = symbols.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let end = lookup[&Symbol::end()];
        let mut productions = vec![g.augmented_production()];
        productions.extend(g.productions().iter().cloned());
        let heads: Vec<usize> = productions.iter().map(|p| lookup[&p.head]).collect();
        let bodies: Vec<Vec<usize>> = productions.iter().map(|p| p.body.iter().map(|s| lookup[s]).collect()).collect();
        let mut by_head = vec![Vec::new(); symbols.len()];
        for (i, h) in heads.iter().enumerate() {
            by_head[*h].push(i);
        }
        let transformative = productions.iter().map(|p| g.is_transformative(p)).collect();
        let mut idx = GrammarIndex {
            grammar: g.clone(),
            symbols,
            n_terms,
            end,
            lookup,
            productions,
            heads,
            bodies,
            by_head,
            transformative,
            nullable: Vec::new(),
            first: Vec::new(),
        };
        idx.compute_first();
        idx
    }

    fn compute_first(&mut self) {
        let n = self.symbols.len();
        self.nullable = vec![false; n];
        self.first = vec![TermSet::with_capacity(self.n_terms); n];
        for t in 0..self.n_terms {
            self.first[t].insert(t);
        }
        let mut changed = true;
        while changed {
            changed = false;
            for p in 0..self.productions.len() {
                let h = self.heads[p];
                let mut all_null = true;
                for &s in &self.bodies[p] {
                    if s != h {
                        let f = self.first[s].clone();
                        changed |= self.first[h].union_with(&f);
                    }
                    if !self.nullable[s] {
                        all_null = false;
                        break;
                    }
                }
                if all_null && !self.nullable[h] {
                    self.nullable[h] = true;
                    changed = true;
                }
            }
        }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &Symbol {
        &self.symbols[i]
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.lookup.get(s).copied()
    }

    pub fn n_terminals(&self) -> usize {
        self.n_terms
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        i < self.n_terms
    }

    /// Index of `$end`.
    pub fn end(&self) -> usize {
        self.end
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, p: usize) -> &Production {
        &self.productions[p]
    }

    pub fn production_id(&self, p: &Production) -> Option<usize> {
        self.productions.iter().position(|q| q == p)
    }

    pub fn head(&self, p: usize) -> usize {
        self.heads[p]
    }

    pub fn body(&self, p: usize) -> &[usize] {
        &self.bodies[p]
    }

    pub fn productions_of(&self, nt: usize) -> &[usize] {
        &self.by_head[nt]
    }

    pub fn is_transformative(&self, p: usize) -> bool {
        self.transformative[p]
    }

    pub fn nullable(&self, s: usize) -> bool {
        self.nullable[s]
    }

    pub fn first_of(&self, s: usize) -> &TermSet {
        &self.first[s]
    }

    pub fn seq_nullable(&self, seq: &[usize]) -> bool {
        seq.iter().all(|s| self.nullable[*s])
    }

    /// FIRST of a string of symbol indices, with its ε flag.
    pub fn first_seq(&self, seq: &[usize]) -> (TermSet, bool) {
        let mut out = TermSet::with_capacity(self.n_terms);
        for &s in seq {
            out.union_with(&self.first[s]);
            if !self.nullable[s] {
                return (out, false);
            }
        }
        (out, true)
    }

    /// Whether `t ∈ FIRST(seq · follow)`.
    pub fn can_begin(&self, seq: &[usize], follow: usize, t: usize) -> bool {
        for &s in seq {
            if self.first[s].contains(t) {
                return true;
            }
            if !self.nullable[s] {
                return false;
            }
        }
        follow == t
    }

    /// FIRST over named symbols.
    pub fn first(&self, alpha: &[Symbol]) -> Result<FirstSet, Lr1Error> {
        let seq = self.indices(alpha)?;
        let (set, epsilon) = self.first_seq(&seq);
        Ok(FirstSet { terminals: set.iter().map(|t| self.symbols[t].clone()).collect(), epsilon })
    }

    pub fn indices(&self, alpha: &[Symbol]) -> Result<Vec<usize>, Lr1Error> {
        alpha.iter().map(|s| self.index_of(s).ok_or_else(|| Lr1Error::UnknownSymbol(s.name().to_string()))).collect()
    }

    /// The least closed superset of `items`.
    pub fn closure(&self, items: impl IntoIterator<Item = Item>) -> ItemSet {
        let mut set: BTreeSet<Item> = BTreeSet::new();
        let mut work: Vec<Item> = Vec::new();
        for it in items {
            if set.insert(it) {
                work.push(it);
            }
        }
        while let Some(it) = work.pop() {
            let body = &self.bodies[it.production];
            let Some(&b) = body.get(it.dot) else { continue };
            if self.is_terminal(b) {
                continue;
            }
            let (mut la, null) = self.first_seq(&body[it.dot + 1..]);
            if null {
                la.insert(it.lookahead);
            }
            for &p in &self.by_head[b] {
                for t in la.iter() {
                    let new = Item { production: p, dot: 0, lookahead: t };
                    if set.insert(new) {
                        work.push(new);
                    }
                }
            }
        }
        ItemSet { id: 0, items: set.into_iter().collect() }
    }

    /// goto(I, X); an empty result means undefined.
    pub fn goto_set(&self, i: &ItemSet, x: &Symbol) -> ItemSet {
        match self.index_of(x) {
            Some(x) => self.goto_index(i, x),
            None => ItemSet { id: 0, items: Vec::new() },
        }
    }

    fn goto_index(&self, i: &ItemSet, x: usize) -> ItemSet {
        let kernel = i
            .items
            .iter()
            .filter(|it| self.bodies[it.production].get(it.dot) == Some(&x))
            .map(|it| Item { dot: it.dot + 1, ..*it });
        self.closure(kernel)
    }

    /// The initial item set `closure({[$accept -> · S, $end]})`.
    pub fn initial(&self) -> ItemSet {
        self.closure([Item { production: 0, dot: 0, lookahead: self.end }])
    }

    pub fn item_string(&self, it: &Item) -> String {
        let p = &self.productions[it.production];
        let mut s = format!("[{} ->", p.head);
        for (k, x) in p.body.iter().enumerate() {
            if k == it.dot {
                s.push_str(" .");
            }
            let _ = write!(s, " {x}");
        }
        if it.dot == p.body.len() {
            s.push_str(" .");
        }
        let _ = write!(s, ", {}]", self.symbols[it.lookahead]);
        s
    }
}

/// FIRST₁ of `alpha` in `g`.
pub fn first(g: &Grammar, alpha: &[Symbol]) -> Result<FirstSet, Lr1Error> {
    GrammarIndex::new(g).first(alpha)
}

/// Closure of `items` in `g`.
pub fn closure(g: &Grammar, items: impl IntoIterator<Item = Item>) -> ItemSet {
    GrammarIndex::new(g).closure(items)
}

/// goto(I, X) in `g`.
pub fn goto_set(g: &Grammar, i: &ItemSet, x: &Symbol) -> ItemSet {
    GrammarIndex::new(g).goto_set(i, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Shift(usize),
    Reduce(usize),
    Accept,
    Error,
}

/// Canonical LR(1) tables with the item-set family they were built from.
#[derive(Clone, Debug)]
pub struct ParseTables {
    index: GrammarIndex,
    states: Vec<ItemSet>,
    action: Vec<Vec<Action>>,
    goto: Vec<Vec<Option<usize>>>,
}

/// Builds the canonical LR(1) tables, numbering states breadth-first with
/// successors taken in symbol order.
pub fn build_tables(g: &Grammar) -> Result<ParseTables, Lr1Error> {
    let index = GrammarIndex::new(g);
    let nt = index.n_terms;
    let n_nonterms = index.symbols.len() - nt;
    let mut states: Vec<ItemSet> = Vec::new();
    let mut ids: HashMap<Vec<Item>, usize> = HashMap::new();
    let mut trans: Vec<Vec<(usize, usize)>> = Vec::new();
    let first = index.initial();
    ids.insert(first.items.clone(), 0);
    states.push(first);
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let next: BTreeSet<usize> =
            states[s].items.iter().filter_map(|it| index.bodies[it.production].get(it.dot).copied()).collect();
        let mut edges = Vec::new();
        for x in next {
            let mut target = index.goto_index(&states[s], x);
            let id = match ids.get(&target.items) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    target.id = id;
                    ids.insert(target.items.clone(), id);
                    states.push(target);
                    queue.push_back(id);
                    id
                }
            };
            edges.push((x, id));
        }
        if trans.len() <= s {
            trans.resize(s + 1, Vec::new());
        }
        trans[s] = edges;
    }
    trans.resize(states.len(), Vec::new());

    let mut action = vec![vec![Action::Error; nt]; states.len()];
    let mut goto = vec![vec![None; n_nonterms]; states.len()];
    let mut conflicts: Vec<Conflict> = Vec::new();
    for (s, set) in states.iter().enumerate() {
        let mut cells: Vec<Vec<Action>> = vec![Vec::new(); nt];
        for &(x, t) in &trans[s] {
            if x < nt {
                cells[x].push(Action::Shift(t));
            } else {
                goto[s][x - nt] = Some(t);
            }
        }
        for it in &set.items {
            if it.dot == index.bodies[it.production].len() {
                let a = if it.production == 0 { Action::Accept } else { Action::Reduce(it.production) };
                if !cells[it.lookahead].contains(&a) {
                    cells[it.lookahead].push(a);
                }
            }
        }
        for (t, cell) in cells.into_iter().enumerate() {
            match cell.len() {
                0 => {}
                1 => action[s][t] = cell[0],
                _ => conflicts.push(Conflict {
                    state: s,
                    terminal: index.symbols[t].clone(),
                    contenders: cell
                        .iter()
                        .map(|a| match a {
                            Action::Shift(_) => Contender::Shift,
                            Action::Reduce(p) => Contender::Reduce(index.productions[*p].clone()),
                            _ => Contender::Reduce(index.productions[0].clone()),
                        })
                        .collect(),
                }),
            }
        }
    }
    if !conflicts.is_empty() {
        return Err(Lr1Error::NotLr1(conflicts));
    }
    Ok(ParseTables { index, states, action, goto })
}

/// Whether `g` is LR(1); on failure the conflicts are returned as diagnostics.
pub fn is_lr1(g: &Grammar) -> (bool, Vec<Conflict>) {
    match build_tables(g) {
        Ok(_) => (true, Vec::new()),
        Err(Lr1Error::NotLr1(c)) => (false, c),
        Err(_) => (false, Vec::new()),
    }
}

impl ParseTables {
    pub fn index(&self) -> &GrammarIndex {
        &self.index
    }

    pub fn grammar(&self) -> &Grammar {
        &self.index.grammar
    }

    pub fn states(&self) -> &[ItemSet] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &ItemSet {
        &self.states[s]
    }

    /// Action for a terminal index.
    pub fn action_at(&self, s: usize, t: usize) -> Action {
        self.action[s][t]
    }

    pub fn action(&self, s: usize, t: &Symbol) -> Action {
        match self.index.index_of(t) {
            Some(t) if self.index.is_terminal(t) => self.action[s][t],
            _ => Action::Error,
        }
    }

    /// goto for a nonterminal index.
    pub fn goto_at(&self, s: usize, x: usize) -> Option<usize> {
        if self.index.is_terminal(x) {
            match self.action[s][x] {
                Action::Shift(t) => Some(t),
                _ => None,
            }
        } else {
            self.goto[s].get(x - self.index.n_terms).copied().flatten()
        }
    }

    /// Successor state on any symbol: goto for nonterminals, the shift
    /// target for terminals.
    pub fn goto(&self, s: usize, x: &Symbol) -> Option<usize> {
        self.goto_at(s, self.index.index_of(x)?)
    }

    /// Text dump: items per state, then an action/goto matrix in TSV.
    pub fn dump(&self) -> String {
        let ix = &self.index;
        let mut out = String::new();
        out.push_str("productions\n");
        for (i, p) in ix.productions.iter().enumerate() {
            let _ = writeln!(out, "  {i}\t{p}");
        }
        for set in &self.states {
            let _ = writeln!(out, "state {}", set.id);
            for it in &set.items {
                let _ = writeln!(out, "  {}", ix.item_string(it));
            }
        }
        out.push('\n');
        let header: Vec<&str> = ix.symbols[..ix.symbols.len() - 1].iter().map(|s| s.name()).collect();
        let _ = writeln!(out, "state\t{}", header.join("\t"));
        for s in 0..self.states.len() {
            let mut row = vec![s.to_string()];
            for t in 0..ix.n_terms {
                row.push(match self.action[s][t] {
                    Action::Shift(m) => format!("s{m}"),
                    Action::Reduce(p) => format!("r{p}"),
                    Action::Accept => "acc".to_string(),
                    Action::Error => String::new(),
                });
            }
            for g in &self.goto[s][..self.goto[s].len() - 1] {
                row.push(g.map(|g| g.to_string()).unwrap_or_default());
            }
            let _ = writeln!(out, "{}", row.join("\t"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StackEntry {
    pub state: usize,
    pub symbol: Option<Symbol>,
}

/// The parser stack; entry 0 is always `(0, ε)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseStack {
    entries: Vec<StackEntry>,
}

impl Default for ParseStack {
    fn default() -> Self {
        Self::new()
    }
}

impl ParseStack {
    pub fn new() -> Self {
        ParseStack { entries: vec![StackEntry { state: 0, symbol: None }] }
    }

    pub fn entries(&self) -> &[StackEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.len() == 1
    }

    pub fn push(&mut self, state: usize, symbol: Symbol) {
        self.entries.push(StackEntry { state, symbol: Some(symbol) });
    }

    /// Pops `n` entries, never the bottom one.
    pub fn pop(&mut self, n: usize) {
        let keep = self.entries.len().saturating_sub(n).max(1);
        self.entries.truncate(keep);
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len.max(1));
    }

    pub fn top_state(&self) -> usize {
        self.entries.last().map_or(0, |e| e.state)
    }

    pub fn top_symbol(&self) -> Option<&Symbol> {
        self.entries.last().and_then(|e| e.symbol.as_ref())
    }

    pub fn state_at(&self, depth: usize) -> usize {
        self.entries[depth].state
    }

    /// The symbol string, bottom to top.
    pub fn symbols(&self) -> Vec<Symbol> {
        self.entries.iter().filter_map(|e| e.symbol.clone()).collect()
    }
}

impl fmt::Display for ParseStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| match &e.symbol {
                Some(s) => format!("{}:{s}", e.state),
                None => e.state.to_string(),
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Rebuilds the stack for `alpha`: entry k holds g(X1..Xk).
pub fn restack(t: &ParseTables, alpha: &[Symbol]) -> Result<ParseStack, Lr1Error> {
    let mut stack = ParseStack::new();
    for (k, x) in alpha.iter().enumerate() {
        match t.goto(stack.top_state(), x) {
            Some(s) => stack.push(s, x.clone()),
            None => return Err(Lr1Error::NotAViablePrefix { position: k }),
        }
    }
    Ok(stack)
}
