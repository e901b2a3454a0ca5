//! Conservation functions over a parser stack and the validity test for a
//! grammar transformation.
//!
//! For the configuration "stack symbols βB followed by lookahead a", every
//! production that can label a node of some tree with yield βBa receives the
//! largest prefix of its body (plus one when the whole body is committed)
//! that the tree pins down. The search walks the item sets of the stack
//! downward: forward from each completed `B` item to find where `a` can
//! appear, and backward through the reverse closure to every ancestor.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::grammar::{Grammar, Production, Symbol, Transformation};
use crate::lr1::{Item, ParseStack, ParseTables};

/// `(π, i)`: production π (by index in the tables' numbering, 0 being
/// `$accept -> S`) had its first `i` symbols pinned; `i = |body|+1` means all of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VisitPair {
    pub production: usize,
    pub count: usize,
}

type Pairs = BTreeSet<VisitPair>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidityError {
    #[error("the stack top is not a nonterminal")]
    NotAtNonterminalTop,
    #[error("lookahead `{0}` is not a terminal of the grammar")]
    UnknownLookahead(String),
    #[error("conservation search ran out of fuel")]
    OutOfFuel,
}

/// Production → conservation value, for every production of the grammar
/// plus `$accept -> S`. Values are −1 (free) or 1..=|body|+1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservationMap {
    entries: Vec<(Production, i32)>,
}

impl ConservationMap {
    /// Every production of `productions` at −1.
    pub fn free(productions: &[Production]) -> Self {
        ConservationMap { entries: productions.iter().map(|p| (p.clone(), -1)).collect() }
    }

    /// Takes the largest count recorded per production.
    pub fn from_pairs(productions: &[Production], pairs: &Pairs) -> Self {
        let mut m = Self::free(productions);
        for vp in pairs {
            let slot = &mut m.entries[vp.production].1;
            *slot = (*slot).max(vp.count as i32);
        }
        m
    }

    pub fn get(&self, p: &Production) -> Option<i32> {
        self.entries.iter().find(|(q, _)| q == p).map(|(_, v)| *v)
    }

    /// Raises the value of `p` to at least `v`.
    pub fn raise(&mut self, p: &Production, v: i32) {
        if let Some(e) = self.entries.iter_mut().find(|(q, _)| q == p) {
            e.1 = e.1.max(v);
        }
    }

    pub fn set(&mut self, p: &Production, v: i32) {
        if let Some(e) = self.entries.iter_mut().find(|(q, _)| q == p) {
            e.1 = v;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Production, i32)> {
        self.entries.iter().map(|(p, v)| (p, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for ConservationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, v) in &self.entries {
            writeln!(f, "{p}\t{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Cache derivation traces per symbol and search results per (item, stack position).
    pub memoize: bool,
    /// Upper bound on search steps.
    pub fuel: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { memoize: true, fuel: 50_000_000 }
    }
}

/// A stack position: the bottom `depth` real entries, optionally topped by
/// one entry standing for a nonterminal that was just completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Pos {
    depth: usize,
    virt: Option<usize>,
}

struct Search<'a> {
    t: &'a ParseTables,
    states: Vec<usize>,
    a: usize,
    opts: Options,
    fuel: usize,
    out_of_fuel: bool,
    follow_memo: HashMap<(Item, Pos), (Rc<Pairs>, bool)>,
    ancestor_memo: HashMap<(Item, Pos), Rc<Pairs>>,
    active: HashSet<(Item, Pos)>,
    la_memo: HashMap<usize, Rc<Pairs>>,
    eps_memo: HashMap<usize, Rc<Pairs>>,
}

impl<'a> Search<'a> {
    fn new(t: &'a ParseTables, stack: &ParseStack, a: usize, opts: Options) -> Self {
        Search {
            t,
            states: stack.entries().iter().map(|e| e.state).collect(),
            a,
            opts,
            fuel: opts.fuel,
            out_of_fuel: false,
            follow_memo: HashMap::new(),
            ancestor_memo: HashMap::new(),
            active: HashSet::new(),
            la_memo: HashMap::new(),
            eps_memo: HashMap::new(),
        }
    }

    fn burn(&mut self) -> bool {
        if self.fuel == 0 {
            self.out_of_fuel = true;
            return false;
        }
        self.fuel -= 1;
        true
    }

    fn top(&self, pos: Pos) -> usize {
        pos.virt.unwrap_or(self.states[pos.depth - 1])
    }

    fn pop(&self, mut pos: Pos, mut n: usize) -> Pos {
        if n > 0 && pos.virt.is_some() {
            pos.virt = None;
            n -= 1;
        }
        pos.depth -= n;
        pos
    }

    /// The symbols after the dot; `$accept -> S` is read as `$accept -> S $end`.
    fn tail(&self, it: &Item) -> Vec<usize> {
        let ix = self.t.index();
        let mut tail = ix.body(it.production)[it.dot..].to_vec();
        if it.production == 0 {
            tail.push(ix.end());
        }
        tail
    }

    /// Reverse closure: items `[D -> ζ · A η, d]` of `state` that can have
    /// introduced `[A -> · …, b]`, i.e. with `b ∈ FIRST(η d)`.
    fn parents(&self, state: usize, head: usize, b: usize) -> Vec<Item> {
        let ix = self.t.index();
        self.t
            .state(state)
            .items
            .iter()
            .filter(|it| {
                let body = ix.body(it.production);
                body.get(it.dot) == Some(&head) && ix.can_begin(&body[it.dot + 1..], it.lookahead, b)
            })
            .copied()
            .collect()
    }

    /// Where a completed `head` entered above position `below`.
    fn lift(&self, below: Pos, head: usize) -> Pos {
        let s = self.top(below);
        let g = self.t.goto_at(s, head).expect("reverse closure item without goto");
        Pos { depth: below.depth, virt: Some(g) }
    }

    fn eps_pairs(&mut self, x: usize) -> Rc<Pairs> {
        if self.opts.memoize {
            if let Some(p) = self.eps_memo.get(&x) {
                return p.clone();
            }
        }
        let mut out = Pairs::new();
        let mut seen = HashSet::new();
        self.collect_eps(x, &mut out, &mut seen);
        let out = Rc::new(out);
        if self.opts.memoize {
            self.eps_memo.insert(x, out.clone());
        }
        out
    }

    fn collect_eps(&mut self, x: usize, out: &mut Pairs, seen: &mut HashSet<usize>) {
        let ix = self.t.index();
        if ix.is_terminal(x) || !ix.nullable(x) || !seen.insert(x) || !self.burn() {
            return;
        }
        for &q in ix.productions_of(x) {
            let body = ix.body(q);
            if ix.seq_nullable(body) {
                out.insert(VisitPair { production: q, count: body.len() + 1 });
                for &y in body {
                    self.collect_eps(y, out, seen);
                }
            }
        }
    }

    fn la_pairs(&mut self, x: usize) -> Rc<Pairs> {
        if self.opts.memoize {
            if let Some(p) = self.la_memo.get(&x) {
                return p.clone();
            }
        }
        let mut out = Pairs::new();
        let mut seen = HashSet::new();
        self.collect_la(x, &mut out, &mut seen);
        let out = Rc::new(out);
        if self.opts.memoize {
            self.la_memo.insert(x, out.clone());
        }
        out
    }

    fn collect_la(&mut self, x: usize, out: &mut Pairs, seen: &mut HashSet<usize>) {
        let ix = self.t.index();
        let a = self.a;
        if ix.is_terminal(x) || !ix.first_of(x).contains(a) || !seen.insert(x) || !self.burn() {
            return;
        }
        for &q in ix.productions_of(x) {
            let body = ix.body(q).to_vec();
            for (i, &y) in body.iter().enumerate() {
                if y == a || (!ix.is_terminal(y) && ix.first_of(y).contains(a)) {
                    out.insert(VisitPair { production: q, count: i + 1 });
                    for &z in &body[..i] {
                        let e = self.eps_pairs(z);
                        out.extend(e.iter().copied());
                    }
                    self.collect_la(y, out, seen);
                }
                if !ix.nullable(y) {
                    break;
                }
            }
        }
    }

    /// Pairs for every way the lookahead can follow the node of `it`
    /// (a completed prefix sitting at `pos`), and whether any exists.
    fn follow(&mut self, pos: Pos, it: Item) -> (Rc<Pairs>, bool) {
        let key = (it, pos);
        if self.opts.memoize {
            if let Some(r) = self.follow_memo.get(&key) {
                return r.clone();
            }
        }
        if !self.burn() || !self.active.insert(key) {
            return (Rc::new(Pairs::new()), false);
        }
        let ix = self.t.index();
        let a = self.a;
        let mut out = Pairs::new();
        let mut found = false;
        let mut pending = Pairs::new();
        let mut all_nullable = true;
        for (i, &y) in self.tail(&it).iter().enumerate() {
            let k = it.dot + i + 1;
            let hit = y == a || (!ix.is_terminal(y) && ix.first_of(y).contains(a));
            if hit {
                found = true;
                out.insert(VisitPair { production: it.production, count: k });
                out.extend(pending.iter().copied());
                if y != a {
                    let la = self.la_pairs(y);
                    out.extend(la.iter().copied());
                }
            }
            if ix.is_terminal(y) || !ix.nullable(y) {
                all_nullable = false;
                break;
            }
            let e = self.eps_pairs(y);
            pending.extend(e.iter().copied());
        }
        if all_nullable && it.lookahead == a {
            let below = self.pop(pos, it.dot);
            let head = ix.head(it.production);
            let mut above = false;
            for parent in self.parents(self.top(below), head, it.lookahead) {
                let up = self.lift(below, head);
                let (pairs, f) = self.follow(up, Item { dot: parent.dot + 1, ..parent });
                if f {
                    above = true;
                    out.extend(pairs.iter().copied());
                }
            }
            if above {
                found = true;
                out.insert(VisitPair { production: it.production, count: ix.body(it.production).len() + 1 });
                out.extend(pending);
            }
        }
        self.active.remove(&key);
        let r = (Rc::new(out), found);
        if self.opts.memoize {
            self.follow_memo.insert(key, r.clone());
        }
        r
    }

    /// Pairs for every ancestor of the node of `it`.
    fn ancestors(&mut self, pos: Pos, it: Item) -> Rc<Pairs> {
        let key = (it, pos);
        if self.opts.memoize {
            if let Some(r) = self.ancestor_memo.get(&key) {
                return r.clone();
            }
        }
        if !self.burn() || !self.active.insert(key) {
            return Rc::new(Pairs::new());
        }
        let ix = self.t.index();
        let below = self.pop(pos, it.dot);
        let head = ix.head(it.production);
        let mut out = Pairs::new();
        if it.production != 0 {
            for parent in self.parents(self.top(below), head, it.lookahead) {
                out.insert(VisitPair { production: parent.production, count: parent.dot + 1 });
                let up = self.lift(below, head);
                let more = self.ancestors(up, Item { dot: parent.dot + 1, ..parent });
                out.extend(more.iter().copied());
            }
        }
        self.active.remove(&key);
        let r = Rc::new(out);
        if self.opts.memoize {
            self.ancestor_memo.insert(key, r.clone());
        }
        r
    }

    fn finish<T>(&self, v: T) -> Result<T, ValidityError> {
        if self.out_of_fuel {
            Err(ValidityError::OutOfFuel)
        } else {
            Ok(v)
        }
    }
}

fn lookahead_index(t: &ParseTables, lookahead: &Symbol) -> Result<usize, ValidityError> {
    match t.index().index_of(lookahead) {
        Some(a) if t.index().is_terminal(a) => Ok(a),
        _ => Err(ValidityError::UnknownLookahead(lookahead.name().to_string())),
    }
}

fn top_pos(stack: &ParseStack) -> Pos {
    Pos { depth: stack.len(), virt: None }
}

/// The conservation map for the stack's symbol string followed by `lookahead`.
pub fn compute_conservation(
    t: &ParseTables,
    stack: &ParseStack,
    lookahead: &Symbol,
) -> Result<ConservationMap, ValidityError> {
    compute_conservation_with(t, stack, lookahead, Options::default())
}

pub fn compute_conservation_with(
    t: &ParseTables,
    stack: &ParseStack,
    lookahead: &Symbol,
    opts: Options,
) -> Result<ConservationMap, ValidityError> {
    match stack.top_symbol() {
        Some(b) if b.is_nonterminal() => {}
        _ => return Err(ValidityError::NotAtNonterminalTop),
    }
    let a = lookahead_index(t, lookahead)?;
    let mut search = Search::new(t, stack, a, opts);
    let pos = top_pos(stack);
    let mut all = Pairs::new();
    for it in t.state(stack.top_state()).items.iter().filter(|it| it.dot > 0).copied() {
        let (pairs, f) = search.follow(pos, it);
        all.extend(pairs.iter().copied());
        if f {
            let anc = search.ancestors(pos, it);
            all.extend(anc.iter().copied());
        }
    }
    search.finish(ConservationMap::from_pairs(t.index().productions(), &all))
}

/// Forward search from one completed item of the top state.
pub fn find_following(
    t: &ParseTables,
    stack: &ParseStack,
    item: &Item,
    lookahead: &Symbol,
) -> Result<(BTreeSet<VisitPair>, bool), ValidityError> {
    let a = lookahead_index(t, lookahead)?;
    let mut search = Search::new(t, stack, a, Options::default());
    let (pairs, f) = search.follow(top_pos(stack), *item);
    let pairs = (*pairs).clone();
    search.finish((pairs, f))
}

/// Ancestor pairs of one item of the top state.
pub fn trace_ancestors(
    t: &ParseTables,
    stack: &ParseStack,
    item: &Item,
    lookahead: &Symbol,
) -> Result<BTreeSet<VisitPair>, ValidityError> {
    let a = lookahead_index(t, lookahead)?;
    let mut search = Search::new(t, stack, a, Options::default());
    let pairs = (*search.ancestors(top_pos(stack), *item)).clone();
    search.finish(pairs)
}

/// How one symbol can start with the lookahead or vanish.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTrace {
    /// Pairs along derivations `x ⇒* a w`.
    pub lookahead_pairs: BTreeSet<VisitPair>,
    /// Pairs along derivations `x ⇒* ε`.
    pub empty_pairs: BTreeSet<VisitPair>,
    pub derives_lookahead: bool,
    pub derives_empty: bool,
}

impl SymbolTrace {
    pub fn pairs(&self) -> BTreeSet<VisitPair> {
        self.lookahead_pairs.union(&self.empty_pairs).copied().collect()
    }
}

/// Derivation trace of a single symbol against the lookahead.
pub fn t_first_symbol(t: &ParseTables, x: &Symbol, lookahead: &Symbol) -> Result<SymbolTrace, ValidityError> {
    let a = lookahead_index(t, lookahead)?;
    let ix = t.index();
    let x = ix.index_of(x).ok_or_else(|| ValidityError::UnknownLookahead(x.name().to_string()))?;
    let mut search = Search::new(t, &ParseStack::new(), a, Options::default());
    let tr = symbol_trace(&mut search, x);
    search.finish(tr)
}

fn symbol_trace(search: &mut Search<'_>, x: usize) -> SymbolTrace {
    let ix = search.t.index();
    if ix.is_terminal(x) {
        return SymbolTrace { derives_lookahead: x == search.a, ..Default::default() };
    }
    SymbolTrace {
        lookahead_pairs: (*search.la_pairs(x)).clone(),
        empty_pairs: (*search.eps_pairs(x)).clone(),
        derives_lookahead: ix.first_of(x).contains(search.a),
        derives_empty: ix.nullable(x),
    }
}

/// How a symbol string can start with the lookahead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringTrace {
    /// Pairs along derivations `γ ⇒* a w`, over every pivot symbol.
    pub lookahead_pairs: BTreeSet<VisitPair>,
    /// Pairs along `γ ⇒* ε` when it exists.
    pub empty_pairs: BTreeSet<VisitPair>,
    pub derives_lookahead: bool,
    /// `|γ|+1` if γ derives ε, else the last (1-based) pivot position, else −1.
    pub k: i64,
}

pub fn t_first_string(t: &ParseTables, gamma: &[Symbol], lookahead: &Symbol) -> Result<StringTrace, ValidityError> {
    let a = lookahead_index(t, lookahead)?;
    let ix = t.index();
    let gamma = ix.indices(gamma).map_err(|e| ValidityError::UnknownLookahead(e.to_string()))?;
    let mut search = Search::new(t, &ParseStack::new(), a, Options::default());
    let mut out =
        StringTrace { lookahead_pairs: Pairs::new(), empty_pairs: Pairs::new(), derives_lookahead: false, k: -1 };
    let mut prefix_eps = Pairs::new();
    let mut nullable = true;
    for (i, &y) in gamma.iter().enumerate() {
        let tr = symbol_trace(&mut search, y);
        if tr.derives_lookahead {
            out.derives_lookahead = true;
            out.k = i as i64 + 1;
            out.lookahead_pairs.extend(prefix_eps.iter().copied());
            out.lookahead_pairs.extend(tr.lookahead_pairs.iter().copied());
        }
        if !tr.derives_empty {
            nullable = false;
            break;
        }
        prefix_eps.extend(tr.empty_pairs);
    }
    if nullable {
        out.k = gamma.len() as i64 + 1;
        out.empty_pairs = prefix_eps;
    }
    search.finish(out)
}

/// Why a transformation fails the validity test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// An entirely conserved production is missing from ΔG.
    Removed(Production),
    /// No production of ΔG keeps the head and the first `prefix` body symbols.
    PrefixLost { production: Production, prefix: usize },
    /// The transformation is structurally malformed for the grammar.
    Malformed(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Removed(p) => write!(f, "{p} not conserved"),
            Violation::PrefixLost { production, prefix } => {
                write!(f, "{production} not conserved: no production keeps its first {prefix} symbol(s)")
            }
            Violation::Malformed(m) => write!(f, "malformed transformation: {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Vec<Violation>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Whether a production of the transformed set conserves `p` up to `v`.
pub fn conserved_by(p: &Production, v: i32, kept: &BTreeSet<&Production>) -> bool {
    if v < 1 {
        return true;
    }
    if v as usize == p.entire() {
        return kept.contains(p);
    }
    let n = v as usize;
    kept.iter().any(|q| q.head == p.head && q.body.len() >= n && q.body[..n] == p.body[..n])
}

/// Checks that ΔG keeps every conserved production up to its conserved prefix.
pub fn is_valid(g: &Grammar, d: &Transformation, v: &ConservationMap) -> Verdict {
    if let Err(e) = d.check(g) {
        return Verdict::Invalid(vec![Violation::Malformed(e.to_string())]);
    }
    let kept: BTreeSet<&Production> =
        g.productions().iter().filter(|p| !d.remove.contains(p)).chain(d.add.iter()).collect();
    let mut violations = Vec::new();
    for (p, val) in v.iter() {
        if p.is_augmented() || conserved_by(p, val, &kept) {
            continue;
        }
        violations.push(if val as usize == p.entire() {
            Violation::Removed(p.clone())
        } else {
            Violation::PrefixLost { production: p.clone(), prefix: val as usize }
        });
    }
    if violations.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid(violations)
    }
}
