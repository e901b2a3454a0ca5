//! Textual grammar and transformation formats.
//!
//! ```text
//! # naive example
//! %terminals c d
//! %start S
//! S -> A | B ;
//! A -> C ;
//! B -> D ;
//! C -> c ;
//! D -> d ;
//! E -> ;            # empty body
//! %transform A -> C ;
//! ```
//!
//! Transformation files use `%add H -> B ;`, `%remove H -> B ;` and
//! `%nonterminal X`. An empty file is the identity transformation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Grammar, GrammarError, Production, Symbol, Transformation, END_MARKER};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Directive(String),
    Arrow,
    Bar,
    Semi,
    Newline,
}

#[derive(Clone, Debug)]
struct Lexeme {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Vec<Lexeme> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let tok = match c {
                ';' => {
                    i += 1;
                    Tok::Semi
                }
                '|' => {
                    i += 1;
                    Tok::Bar
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    i += 2;
                    Tok::Arrow
                }
                _ => {
                    let s = i;
                    while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], ';' | '|' | '#') {
                        i += 1;
                    }
                    let word: String = chars[s..i].iter().collect();
                    match word.strip_prefix('%') {
                        Some(d) => Tok::Directive(d.to_string()),
                        None => Tok::Ident(word),
                    }
                }
            };
            out.push(Lexeme { tok, line: ln + 1, col });
        }
        out.push(Lexeme { tok: Tok::Newline, line: ln + 1, col: chars.len() + 1 });
    }
    out
}

struct Cursor {
    toks: Vec<Lexeme>,
    pos: usize,
}

/// A rule as written: head name, alternatives of body names, with positions.
struct RawRule {
    head: (String, usize, usize),
    alts: Vec<Vec<(String, usize, usize)>>,
}

impl Cursor {
    fn new(text: &str) -> Self {
        Cursor { toks: lex(text), pos: 0 }
    }

    fn peek(&self) -> Option<&Lexeme> {
        self.toks.get(self.pos)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, GrammarError> {
        let (line, col) = match self.peek() {
            Some(l) => (l.line, l.col),
            None => self.toks.last().map_or((1, 1), |l| (l.line, l.col)),
        };
        Err(GrammarError::SyntaxError { line, col, message: message.into() })
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Lexeme { tok: Tok::Newline, .. })) {
            self.pos += 1;
        }
    }

    /// Identifiers up to the end of the current line (an optional `;` ends the list early).
    fn names_to_eol(&mut self) -> Result<Vec<(String, usize, usize)>, GrammarError> {
        let mut out = Vec::new();
        while let Some(l) = self.peek().cloned() {
            match l.tok {
                Tok::Ident(w) => {
                    out.push((w, l.line, l.col));
                    self.pos += 1;
                }
                Tok::Newline => break,
                Tok::Semi => {
                    self.pos += 1;
                    break;
                }
                _ => return self.err("expected a symbol name"),
            }
        }
        Ok(out)
    }

    fn rule(&mut self) -> Result<RawRule, GrammarError> {
        self.skip_newlines();
        let head = match self.peek().cloned() {
            Some(Lexeme { tok: Tok::Ident(w), line, col }) => {
                self.pos += 1;
                (w, line, col)
            }
            _ => return self.err("expected a nonterminal before `->`"),
        };
        self.skip_newlines();
        if !matches!(self.peek(), Some(Lexeme { tok: Tok::Arrow, .. })) {
            return self.err("expected `->`");
        }
        self.pos += 1;
        let mut alts = vec![Vec::new()];
        loop {
            let Some(l) = self.peek().cloned() else {
                return self.err("unterminated rule: expected `;`");
            };
            self.pos += 1;
            match l.tok {
                Tok::Ident(w) => alts.last_mut().unwrap().push((w, l.line, l.col)),
                Tok::Bar => alts.push(Vec::new()),
                Tok::Semi => break,
                Tok::Newline => {}
                _ => {
                    self.pos -= 1;
                    return self.err("unterminated rule: expected `;`");
                }
            }
        }
        Ok(RawRule { head, alts })
    }
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::SyntaxError { line, col, message: message.into() }
}

fn check_name(name: &str, line: usize, col: usize) -> Result<(), GrammarError> {
    if name == END_MARKER {
        return Ok(());
    }
    if name.starts_with('$') || name.contains("->") {
        return Err(syntax(line, col, format!("reserved name `{name}`")));
    }
    Ok(())
}

/// Parses a grammar file.
pub fn parse_grammar_text(text: &str) -> Result<Grammar, GrammarError> {
    let mut cur = Cursor::new(text);
    let mut terminals: Vec<(String, usize, usize)> = Vec::new();
    let mut declared_nt: Vec<(String, usize, usize)> = Vec::new();
    let mut start: Option<(String, usize, usize)> = None;
    let mut rules = Vec::new();
    let mut trans_rules = Vec::new();
    loop {
        cur.skip_newlines();
        let Some(l) = cur.peek().cloned() else { break };
        match l.tok {
            Tok::Directive(d) => {
                cur.pos += 1;
                match d.as_str() {
                    "terminals" => terminals.extend(cur.names_to_eol()?),
                    "nonterminals" => declared_nt.extend(cur.names_to_eol()?),
                    "start" => {
                        let names = cur.names_to_eol()?;
                        if names.len() != 1 {
                            return Err(syntax(l.line, l.col, "`%start` takes exactly one name"));
                        }
                        start = names.into_iter().next();
                    }
                    "transform" => trans_rules.push(cur.rule()?),
                    other => return Err(syntax(l.line, l.col, format!("unknown directive `%{other}`"))),
                }
            }
            Tok::Ident(_) => rules.push(cur.rule()?),
            _ => return cur.err("expected a rule or a directive"),
        }
    }

    for (n, line, col) in terminals.iter().chain(&declared_nt) {
        check_name(n, *line, *col)?;
    }
    let term_names: BTreeSet<&str> = terminals.iter().map(|t| t.0.as_str()).collect();
    let mut nt_names: Vec<String> = Vec::new();
    for (n, line, col) in declared_nt.iter().chain(rules.iter().map(|r| &r.head)) {
        check_name(n, *line, *col)?;
        if term_names.contains(n.as_str()) {
            return Err(GrammarError::DuplicateSymbol(n.clone()));
        }
        if !nt_names.contains(n) {
            nt_names.push(n.clone());
        }
    }
    let resolve = |name: &str| -> Option<Symbol> {
        if name == END_MARKER || term_names.contains(name) {
            Some(Symbol::terminal(name))
        } else if nt_names.iter().any(|n| n == name) {
            Some(Symbol::nonterminal(name))
        } else {
            None
        }
    };
    let expand = |rules: &[RawRule]| -> Result<Vec<Production>, GrammarError> {
        let mut out = Vec::new();
        for r in rules {
            let head = match resolve(&r.head.0) {
                Some(h) if h.is_nonterminal() => h,
                _ => return Err(GrammarError::UnknownSymbol(r.head.0.clone())),
            };
            for alt in &r.alts {
                let mut body = Vec::new();
                for (w, _, _) in alt {
                    match resolve(w) {
                        Some(s) => body.push(s),
                        None => {
                            return Err(GrammarError::UnknownSymbolInBody {
                                production: format!("{head} -> ..."),
                                symbol: w.clone(),
                            });
                        }
                    }
                }
                out.push(Production::new(head.clone(), body));
            }
        }
        Ok(out)
    };
    let productions = expand(&rules)?;
    let transformative = expand(&trans_rules)?;
    let start = match start {
        Some((s, _, _)) => Symbol::nonterminal(&s),
        None => match nt_names.first() {
            Some(n) => Symbol::nonterminal(n),
            None => return Err(syntax(1, 1, "grammar has no nonterminals")),
        },
    };
    Grammar::new(
        terminals.iter().map(|t| Symbol::terminal(&t.0)),
        nt_names.iter().map(|n| Symbol::nonterminal(n)),
        productions,
        start,
        transformative,
    )
}

/// Parses a transformation file against the grammar it will be applied to.
pub fn parse_transformation_text(text: &str, g: &Grammar) -> Result<Transformation, GrammarError> {
    let mut cur = Cursor::new(text);
    let mut new_nt = Vec::new();
    let mut adds = Vec::new();
    let mut removes = Vec::new();
    loop {
        cur.skip_newlines();
        let Some(l) = cur.peek().cloned() else { break };
        match l.tok {
            Tok::Directive(d) => {
                cur.pos += 1;
                match d.as_str() {
                    "nonterminal" | "nonterminals" => new_nt.extend(cur.names_to_eol()?),
                    "add" => adds.push(cur.rule()?),
                    "remove" => removes.push(cur.rule()?),
                    other => return Err(syntax(l.line, l.col, format!("unknown directive `%{other}`"))),
                }
            }
            _ => return cur.err("expected `%add`, `%remove` or `%nonterminal`"),
        }
    }
    let mut d = Transformation::identity();
    for (n, line, col) in &new_nt {
        check_name(n, *line, *col)?;
        if n == END_MARKER {
            return Err(GrammarError::ReservedName(n.clone()));
        }
        if g.symbol(n).is_some() {
            return Err(GrammarError::DuplicateSymbol(n.clone()));
        }
        d.new_nonterminals.insert(Symbol::nonterminal(n));
    }
    let resolve = |name: &str| -> Option<Symbol> {
        g.symbol(name).or_else(|| {
            let n = Symbol::nonterminal(name);
            d.new_nonterminals.contains(&n).then_some(n)
        })
    };
    let expand = |rules: &[RawRule]| -> Result<Vec<Production>, GrammarError> {
        let mut out = Vec::new();
        for r in rules {
            let head = match resolve(&r.head.0) {
                Some(h) if h.is_nonterminal() => h,
                _ => return Err(GrammarError::UnknownSymbol(r.head.0.clone())),
            };
            for alt in &r.alts {
                let body = alt
                    .iter()
                    .map(|(w, _, _)| {
                        resolve(w).ok_or_else(|| GrammarError::UnknownSymbolInBody {
                            production: format!("{} -> ...", head),
                            symbol: w.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                out.push(Production::new(head.clone(), body));
            }
        }
        Ok(out)
    };
    d.add = expand(&adds)?.into_iter().collect();
    d.remove = expand(&removes)?.into_iter().collect();
    d.check(g)?;
    Ok(d)
}

fn rule_line(p: &Production) -> String {
    let mut s = format!("{} ->", p.head);
    for x in &p.body {
        let _ = write!(s, " {x}");
    }
    s.push_str(" ;");
    s
}

/// Serializes a grammar so that [`parse_grammar_text`] reads it back unchanged.
pub fn render(g: &Grammar) -> String {
    let mut out = String::new();
    let terms: Vec<&str> = g.terminals().iter().filter(|t| !t.is_end()).map(|t| t.name()).collect();
    let nts: Vec<&str> = g.nonterminals().iter().map(|n| n.name()).collect();
    let _ = writeln!(out, "%terminals {}", terms.join(" "));
    let _ = writeln!(out, "%nonterminals {}", nts.join(" "));
    let _ = writeln!(out, "%start {}", g.start());
    for p in g.productions() {
        let _ = writeln!(out, "{}", rule_line(p));
    }
    for p in g.productions().iter().filter(|p| g.is_transformative(p)) {
        let _ = writeln!(out, "%transform {}", rule_line(p));
    }
    out
}
