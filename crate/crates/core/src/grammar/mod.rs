//! Grammar data model: symbols, productions, transformative grammars and
//! grammar transformations.

mod provider;
mod text;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use provider::{DeltaContext, DeltaOutput, DeltaProvider, IdentityProvider, ScriptedProvider};
pub use text::{parse_grammar_text, parse_transformation_text, render};

/// Name of the end-of-input terminal present in every grammar.
pub const END_MARKER: &str = "$end";
/// Name of the augmentation nonterminal S′ used by the table construction.
pub const ACCEPT: &str = "$accept";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Terminal,
    Nonterminal,
}

/// A grammar symbol. Symbols order terminals before nonterminals, then by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    kind: SymbolKind,
    name: Arc<str>,
}

impl Symbol {
    pub fn terminal(name: &str) -> Self {
        Symbol { kind: SymbolKind::Terminal, name: name.into() }
    }

    pub fn nonterminal(name: &str) -> Self {
        Symbol { kind: SymbolKind::Nonterminal, name: name.into() }
    }

    /// The end marker `$end`.
    pub fn end() -> Self {
        Symbol::terminal(END_MARKER)
    }

    /// The augmentation symbol `$accept`.
    pub fn accept() -> Self {
        Symbol::nonterminal(ACCEPT)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == SymbolKind::Terminal
    }

    pub fn is_nonterminal(&self) -> bool {
        self.kind == SymbolKind::Nonterminal
    }

    pub fn is_end(&self) -> bool {
        self.is_terminal() && &*self.name == END_MARKER
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A production `head -> body`; an empty body is ε.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Production {
    pub head: Symbol,
    pub body: Vec<Symbol>,
}

impl Production {
    pub fn new(head: Symbol, body: Vec<Symbol>) -> Self {
        Production { head, body }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// The value a conservation map assigns when the whole production is kept.
    pub fn entire(&self) -> usize {
        self.body.len() + 1
    }

    pub fn is_augmented(&self) -> bool {
        self.head.name() == ACCEPT
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.head)?;
        if self.body.is_empty() {
            return f.write_str(" ε");
        }
        for s in &self.body {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("unknown symbol `{symbol}` in `{production}`")]
    UnknownSymbolInBody { production: String, symbol: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("transformative production `{0}` is not in the production set")]
    TransformativeNotInP(String),
    #[error("`$end` appears in the body of `{0}`")]
    EndMarkerInBody(String),
    #[error("start symbol `{0}` is not a nonterminal of the grammar")]
    BadStart(String),
    #[error("name `{0}` is reserved")]
    ReservedName(String),
    #[error("cannot remove `{0}`: not in the production set")]
    RemoveNotPresent(String),
    #[error("cannot add `{0}`: already in the production set")]
    AddAlreadyPresent(String),
    #[error("cannot remove transformative production `{0}`")]
    RemovesTransformative(String),
    #[error("line {line}, column {col}: {message}")]
    SyntaxError { line: usize, col: usize, message: String },
}

/// A transformative context-free grammar (without its Δ-machine, which is
/// supplied separately as a [`DeltaProvider`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    terminals: BTreeSet<Symbol>,
    nonterminals: BTreeSet<Symbol>,
    productions: Vec<Production>,
    start: Symbol,
    transformative: BTreeSet<Production>,
}

fn reserved(name: &str) -> bool {
    name.starts_with('$') || name.starts_with('%') || name.is_empty()
}

impl Grammar {
    /// Validates and builds a grammar. `$end` is added to the terminals;
    /// duplicate productions collapse to their first occurrence.
    pub fn new(
        terminals: impl IntoIterator<Item = Symbol>,
        nonterminals: impl IntoIterator<Item = Symbol>,
        productions: impl IntoIterator<Item = Production>,
        start: Symbol,
        transformative: impl IntoIterator<Item = Production>,
    ) -> Result<Self, GrammarError> {
        let mut names = BTreeSet::new();
        let mut terms = BTreeSet::new();
        for t in terminals {
            if t.is_end() {
                continue;
            }
            if !t.is_terminal() || reserved(t.name()) {
                return Err(GrammarError::ReservedName(t.name().to_string()));
            }
            if !names.insert(t.name().to_string()) {
                return Err(GrammarError::DuplicateSymbol(t.name().to_string()));
            }
            terms.insert(t);
        }
        terms.insert(Symbol::end());
        let mut nonterms = BTreeSet::new();
        for n in nonterminals {
            if !n.is_nonterminal() || reserved(n.name()) {
                return Err(GrammarError::ReservedName(n.name().to_string()));
            }
            if !names.insert(n.name().to_string()) {
                return Err(GrammarError::DuplicateSymbol(n.name().to_string()));
            }
            nonterms.insert(n);
        }
        if !nonterms.contains(&start) {
            return Err(GrammarError::BadStart(start.name().to_string()));
        }
        let mut seen = BTreeSet::new();
        let mut prods = Vec::new();
        for p in productions {
            check_production(&p, &terms, &nonterms, None)?;
            if seen.insert(p.clone()) {
                prods.push(p);
            }
        }
        let mut trans = BTreeSet::new();
        for t in transformative {
            if !seen.contains(&t) {
                return Err(GrammarError::TransformativeNotInP(t.to_string()));
            }
            trans.insert(t);
        }
        Ok(Grammar { terminals: terms, nonterminals: nonterms, productions: prods, start, transformative: trans })
    }

    /// Terminals, including `$end`.
    pub fn terminals(&self) -> &BTreeSet<Symbol> {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &BTreeSet<Symbol> {
        &self.nonterminals
    }

    /// Productions in insertion order.
    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn start(&self) -> &Symbol {
        &self.start
    }

    pub fn transformative(&self) -> &BTreeSet<Production> {
        &self.transformative
    }

    pub fn is_transformative(&self, p: &Production) -> bool {
        self.transformative.contains(p)
    }

    pub fn contains(&self, p: &Production) -> bool {
        self.productions.iter().any(|q| q == p)
    }

    /// The augmentation production `$accept -> S`.
    pub fn augmented_production(&self) -> Production {
        Production::new(Symbol::accept(), vec![self.start.clone()])
    }

    /// Finds a grammar symbol by name.
    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        let t = Symbol::terminal(name);
        if self.terminals.contains(&t) {
            return Some(t);
        }
        let n = Symbol::nonterminal(name);
        self.nonterminals.contains(&n).then_some(n)
    }

    /// Resolves whitespace-separated terminal names into symbols.
    pub fn terminal_string(&self, text: &str) -> Result<Vec<Symbol>, GrammarError> {
        text.split_whitespace()
            .map(|w| {
                let t = Symbol::terminal(w);
                if t.is_end() || !self.terminals.contains(&t) {
                    Err(GrammarError::UnknownSymbol(w.to_string()))
                } else {
                    Ok(t)
                }
            })
            .collect()
    }

    /// Resolves whitespace-separated names of any grammar symbols.
    pub fn symbol_string(&self, text: &str) -> Result<Vec<Symbol>, GrammarError> {
        text.split_whitespace()
            .map(|w| self.symbol(w).ok_or_else(|| GrammarError::UnknownSymbol(w.to_string())))
            .collect()
    }

    /// Symbols that derive some terminal string, terminals included.
    pub fn productive_symbols(&self) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> = self.terminals.clone();
        loop {
            let before = out.len();
            for p in &self.productions {
                if !out.contains(&p.head) && p.body.iter().all(|x| out.contains(x)) {
                    out.insert(p.head.clone());
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    /// Symbols occurring in some sentential form, the start symbol included.
    pub fn reachable_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::from([self.start.clone()]);
        loop {
            let before = out.len();
            for p in &self.productions {
                if out.contains(&p.head) {
                    out.extend(p.body.iter().cloned());
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    /// Reachable nonterminals that derive no terminal string. LR(1) parsing
    /// presumes there are none.
    pub fn unproductive_reachable(&self) -> Vec<Symbol> {
        let productive = self.productive_symbols();
        self.reachable_symbols().into_iter().filter(|x| !productive.contains(x)).collect()
    }

    /// Returns ΔG.
    pub fn apply(&self, d: &Transformation) -> Result<Grammar, GrammarError> {
        apply_transformation(self, d)
    }
}

fn check_production(
    p: &Production,
    terms: &BTreeSet<Symbol>,
    nonterms: &BTreeSet<Symbol>,
    extra: Option<&BTreeSet<Symbol>>,
) -> Result<(), GrammarError> {
    let known_nt = |s: &Symbol| nonterms.contains(s) || extra.is_some_and(|e| e.contains(s));
    if !known_nt(&p.head) {
        return Err(GrammarError::UnknownSymbol(p.head.name().to_string()));
    }
    for s in &p.body {
        if s.is_end() {
            return Err(GrammarError::EndMarkerInBody(p.to_string()));
        }
        let ok = if s.is_terminal() { terms.contains(s) } else { known_nt(s) };
        if !ok {
            return Err(GrammarError::UnknownSymbolInBody { production: p.to_string(), symbol: s.name().to_string() });
        }
    }
    Ok(())
}

/// Builds a validated grammar; see [`Grammar::new`].
pub fn make_grammar(
    terminals: impl IntoIterator<Item = Symbol>,
    nonterminals: impl IntoIterator<Item = Symbol>,
    productions: impl IntoIterator<Item = Production>,
    start: Symbol,
    transformative: impl IntoIterator<Item = Production>,
) -> Result<Grammar, GrammarError> {
    Grammar::new(terminals, nonterminals, productions, start, transformative)
}

/// A grammar transformation Δ = (new nonterminals, added, removed).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transformation {
    pub new_nonterminals: BTreeSet<Symbol>,
    pub add: BTreeSet<Production>,
    pub remove: BTreeSet<Production>,
}

impl Transformation {
    /// Δe, the identity transformation.
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.new_nonterminals.is_empty() && self.add.is_empty() && self.remove.is_empty()
    }

    /// Checks the structural conditions relating this transformation to `g`.
    pub fn check(&self, g: &Grammar) -> Result<(), GrammarError> {
        for n in &self.new_nonterminals {
            if !n.is_nonterminal() || reserved(n.name()) {
                return Err(GrammarError::ReservedName(n.name().to_string()));
            }
            if g.symbol(n.name()).is_some() {
                return Err(GrammarError::DuplicateSymbol(n.name().to_string()));
            }
        }
        for p in &self.add {
            check_production(p, &g.terminals, &g.nonterminals, Some(&self.new_nonterminals))?;
            if g.contains(p) {
                return Err(GrammarError::AddAlreadyPresent(p.to_string()));
            }
        }
        for p in &self.remove {
            if !g.contains(p) {
                return Err(GrammarError::RemoveNotPresent(p.to_string()));
            }
            if g.is_transformative(p) {
                return Err(GrammarError::RemovesTransformative(p.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "+{}/-{}", self.add.len(), self.remove.len())
    }
}

/// Computes ΔG: nonterminals extended, productions `(P ∪ add) \ remove`.
/// Surviving productions keep their order; additions follow in sorted order.
pub fn apply_transformation(g: &Grammar, d: &Transformation) -> Result<Grammar, GrammarError> {
    d.check(g)?;
    let mut out = g.clone();
    out.nonterminals.extend(d.new_nonterminals.iter().cloned());
    out.productions.retain(|p| !d.remove.contains(p));
    out.productions.extend(d.add.iter().cloned());
    Ok(out)
}
