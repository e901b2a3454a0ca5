//! The transformative LR(1) parser: a canonical LR(1) loop that, whenever a
//! transformative production is reduced, asks a [`DeltaProvider`] for a
//! grammar transformation, checks it against the conservation map of the
//! current stack, and continues in the transformed grammar.

use std::fmt;

use thiserror::Error;

use crate::grammar::{DeltaContext, DeltaProvider, Grammar, GrammarError, Production, Symbol, Transformation};
use crate::lr1::{build_tables, restack, Action, Conflict, Lr1Error, ParseStack, ParseTables};
use crate::validity::{compute_conservation, is_valid, ConservationMap, ValidityError, Verdict, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParserError {
    #[error("grammar is not LR(1): {}", .0.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "))]
    NotLr1(Vec<Conflict>),
    #[error("unknown terminal `{0}` in input")]
    UnknownToken(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    SyntaxError {
        state: usize,
        lookahead: Symbol,
    },
    InvalidTransformation(Vec<Violation>),
    TransformedGrammarNotLr1(Vec<Conflict>),
    /// ΔG has reachable nonterminals deriving no terminal string.
    TransformedGrammarUnproductive(Vec<Symbol>),
    RestackFailed {
        position: usize,
    },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::SyntaxError { state, lookahead } => {
                write!(f, "syntax-error: state {state}, lookahead {lookahead}")
            }
            RejectReason::InvalidTransformation(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "invalid-transformation: {}", parts.join("; "))
            }
            RejectReason::TransformedGrammarNotLr1(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "transformed-grammar-not-lr1: {}", parts.join("; "))
            }
            RejectReason::TransformedGrammarUnproductive(xs) => {
                let parts: Vec<&str> = xs.iter().map(Symbol::name).collect();
                write!(f, "transformed-grammar-unproductive: {}", parts.join(" "))
            }
            RejectReason::RestackFailed { position } => write!(f, "restack-failed: symbol {position}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected(RejectReason),
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseEvent {
    Shift(Symbol),
    Reduce(Production),
    Transform { transformation: Transformation, outcome: Outcome },
    Accept,
    Reject(RejectReason),
}

impl fmt::Display for ParseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseEvent::Shift(s) => write!(f, "SHIFT {s}"),
            ParseEvent::Reduce(p) => write!(f, "REDUCE {p}"),
            ParseEvent::Transform { transformation, outcome } => {
                let word = if outcome.is_accepted() { "accepted" } else { "rejected" };
                write!(f, "TRANSFORM {word} {transformation}")
            }
            ParseEvent::Accept => f.write_str("ACCEPT"),
            ParseEvent::Reject(r) => write!(f, "REJECT {r}"),
        }
    }
}

/// Result of a complete parse.
#[derive(Clone, Debug)]
pub struct ParseResult {
    pub outcome: Outcome,
    pub events: Vec<ParseEvent>,
    /// The grammar in force when the parse ended.
    pub grammar: Grammar,
}

impl ParseResult {
    pub fn accepted(&self) -> bool {
        self.outcome.is_accepted()
    }

    /// The event trace, one line per event.
    pub fn trace(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// A parse in progress.
pub struct Parser<'p> {
    grammar: Grammar,
    tables: ParseTables,
    stack: ParseStack,
    scanned: Vec<Symbol>,
    memory: Vec<u8>,
    provider: Box<dyn DeltaProvider + 'p>,
    input: Vec<Symbol>,
    cursor: usize,
    pending_head: Option<Symbol>,
    pending_reject: Option<RejectReason>,
    events: Vec<ParseEvent>,
    outcome: Option<Outcome>,
}

impl<'p> Parser<'p> {
    /// Starts a parse of `tokens` (without `$end`, which is appended).
    pub fn new(g: &Grammar, tokens: &[Symbol], provider: impl DeltaProvider + 'p) -> Result<Self, ParserError> {
        let tables = build_tables(g).map_err(|e| match e {
            Lr1Error::NotLr1(c) => ParserError::NotLr1(c),
            _ => ParserError::NotLr1(Vec::new()),
        })?;
        let mut input = Vec::with_capacity(tokens.len() + 1);
        for t in tokens {
            if !t.is_terminal() || t.is_end() || !g.terminals().contains(t) {
                return Err(ParserError::UnknownToken(t.name().to_string()));
            }
            input.push(t.clone());
        }
        input.push(Symbol::end());
        Ok(Parser {
            grammar: g.clone(),
            tables,
            stack: ParseStack::new(),
            scanned: Vec::new(),
            memory: Vec::new(),
            provider: Box::new(provider),
            input,
            cursor: 0,
            pending_head: None,
            pending_reject: None,
            events: Vec::new(),
            outcome: None,
        })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn tables(&self) -> &ParseTables {
        &self.tables
    }

    pub fn stack(&self) -> &ParseStack {
        &self.stack
    }

    /// Terminals shifted since the last reduction.
    pub fn scanned(&self) -> &[Symbol] {
        &self.scanned
    }

    pub fn memory(&self) -> &[u8] {
        &self.memory
    }

    pub fn lookahead(&self) -> &Symbol {
        &self.input[self.cursor]
    }

    pub fn position(&self) -> usize {
        self.cursor
    }

    pub fn events(&self) -> &[ParseEvent] {
        &self.events
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    /// The head of a transformative production whose reduction is waiting
    /// for its transformation step.
    pub fn pending_transform(&self) -> Option<&Symbol> {
        self.pending_head.as_ref()
    }

    /// The conservation map a transformation at the pending reduction is
    /// checked against: the stack string with the head pushed, then the lookahead.
    pub fn pending_conservation(&self) -> Option<Result<ConservationMap, ValidityError>> {
        self.pending_head.as_ref().map(|h| self.conservation_for(h))
    }

    fn conservation_for(&self, head: &Symbol) -> Result<ConservationMap, ValidityError> {
        let mut probe = self.stack.clone();
        let s = self.stack.top_state();
        probe.push(self.tables.goto(s, head).expect("goto defined after a reduction"), head.clone());
        compute_conservation(&self.tables, &probe, self.lookahead())
    }

    /// Performs one action and returns its event, or `None` once the parse has ended.
    pub fn step(&mut self) -> Option<ParseEvent> {
        if self.outcome.is_some() {
            return None;
        }
        let ev = if let Some(reason) = self.pending_reject.take() {
            self.outcome = Some(Outcome::Rejected(reason.clone()));
            ParseEvent::Reject(reason)
        } else if let Some(head) = self.pending_head.take() {
            self.transform_step(head)
        } else {
            self.table_step()
        };
        self.events.push(ev.clone());
        Some(ev)
    }

    fn table_step(&mut self) -> ParseEvent {
        let s = self.stack.top_state();
        let a = self.input[self.cursor].clone();
        match self.tables.action(s, &a) {
            Action::Shift(m) => {
                self.stack.push(m, a.clone());
                self.scanned.push(a.clone());
                self.cursor += 1;
                ParseEvent::Shift(a)
            }
            Action::Reduce(p) => {
                let prod = self.tables.index().production(p).clone();
                self.stack.pop(prod.body.len());
                if self.tables.index().is_transformative(p) {
                    self.pending_head = Some(prod.head.clone());
                } else {
                    self.finish_reduce(&prod.head);
                }
                ParseEvent::Reduce(prod)
            }
            Action::Accept => {
                self.outcome = Some(Outcome::Accepted);
                ParseEvent::Accept
            }
            Action::Error => {
                let reason = RejectReason::SyntaxError { state: s, lookahead: a };
                self.outcome = Some(Outcome::Rejected(reason.clone()));
                ParseEvent::Reject(reason)
            }
        }
    }

    fn finish_reduce(&mut self, head: &Symbol) {
        self.scanned.clear();
        let s = self.stack.top_state();
        let g = self.tables.goto(s, head).expect("goto defined after a reduction");
        self.stack.push(g, head.clone());
    }

    fn reject_transform(&mut self, d: Transformation, reason: RejectReason) -> ParseEvent {
        self.pending_reject = Some(reason.clone());
        ParseEvent::Transform { transformation: d, outcome: Outcome::Rejected(reason) }
    }

    /// Consults the provider after the body of a transformative production
    /// headed by `head` has been popped, validates and applies the returned
    /// transformation, rebuilds the tables and restacks, then completes the
    /// reduction by pushing `head`.
    pub fn transform_step(&mut self, head: Symbol) -> ParseEvent {
        let out = {
            let ctx = DeltaContext {
                scanned: &self.scanned,
                memory: &self.memory,
                grammar: &self.grammar,
                events: &self.events,
            };
            self.provider.provide(&ctx)
        };
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                let reason = RejectReason::InvalidTransformation(vec![Violation::Malformed(e.to_string())]);
                return self.reject_transform(Transformation::identity(), reason);
            }
        };
        self.memory = out.memory;
        let d = out.transformation;
        if d.is_identity() {
            self.finish_reduce(&head);
            return ParseEvent::Transform { transformation: d, outcome: Outcome::Accepted };
        }
        let verdict = match self.conservation_for(&head) {
            Ok(v) => is_valid(&self.grammar, &d, &v),
            Err(e) => Verdict::Invalid(vec![Violation::Malformed(e.to_string())]),
        };
        if let Verdict::Invalid(vs) = verdict {
            return self.reject_transform(d, RejectReason::InvalidTransformation(vs));
        }
        let next = match self.grammar.apply(&d) {
            Ok(g) => g,
            Err(e) => {
                let reason = RejectReason::InvalidTransformation(vec![Violation::Malformed(e.to_string())]);
                return self.reject_transform(d, reason);
            }
        };
        let dead = next.unproductive_reachable();
        if !dead.is_empty() {
            return self.reject_transform(d, RejectReason::TransformedGrammarUnproductive(dead));
        }
        let tables = match build_tables(&next) {
            Ok(t) => t,
            Err(Lr1Error::NotLr1(c)) => return self.reject_transform(d, RejectReason::TransformedGrammarNotLr1(c)),
            Err(_) => return self.reject_transform(d, RejectReason::TransformedGrammarNotLr1(vec![])),
        };
        let mut symbols = self.stack.symbols();
        symbols.push(head);
        let stack = match restack(&tables, &symbols) {
            Ok(s) => s,
            Err(e) => {
                let position = match e {
                    Lr1Error::NotAViablePrefix { position } => position,
                    _ => symbols.len(),
                };
                log::error!("restack failed at symbol {position} after a transformation passed validation");
                return self.reject_transform(d, RejectReason::RestackFailed { position });
            }
        };
        self.grammar = next;
        self.tables = tables;
        self.stack = stack;
        self.scanned.clear();
        ParseEvent::Transform { transformation: d, outcome: Outcome::Accepted }
    }

    /// Runs to completion.
    pub fn run(mut self) -> ParseResult {
        while self.step().is_some() {}
        ParseResult {
            outcome: self.outcome.expect("finished parse has an outcome"),
            events: self.events,
            grammar: self.grammar,
        }
    }
}

/// Parses `tokens` with `g`, consulting `provider` at transformative reductions.
pub fn parse(g: &Grammar, tokens: &[Symbol], provider: impl DeltaProvider) -> Result<ParseResult, ParserError> {
    Ok(Parser::new(g, tokens, provider)?.run())
}

/// Re-runs a parse feeding back the transformations recorded in `events`.
pub fn replay(g: &Grammar, tokens: &[Symbol], events: &[ParseEvent]) -> Result<ParseResult, ParserError> {
    let mut recorded = events
        .iter()
        .filter_map(|e| match e {
            ParseEvent::Transform { transformation, .. } => Some(transformation.clone()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .into_iter();
    let provider = move |ctx: &DeltaContext<'_>| -> Result<crate::grammar::DeltaOutput, GrammarError> {
        Ok(crate::grammar::DeltaOutput {
            memory: ctx.memory.to_vec(),
            transformation: recorded.next().unwrap_or_default(),
        })
    };
    parse(g, tokens, provider)
}
