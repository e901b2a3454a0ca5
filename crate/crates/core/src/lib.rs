//! Transformative LR(1) parsing.
//!
//! A transformative grammar is a context-free grammar in which some
//! productions are marked transformative: reducing one of them lets a host
//! supplied [`grammar::DeltaProvider`] rewrite the production set in the
//! middle of a parse. The parser accepts a rewrite only if it keeps every
//! production the parse has already committed to, which guarantees that the
//! parse still terminates.
//!
//! ```
//! use tlr::grammar::{parse_grammar_text, IdentityProvider};
//! use tlr::parser::parse;
//!
//! let g = parse_grammar_text("%terminals a b\nS -> a S b | ;").unwrap();
//! let tokens = g.terminal_string("a a b b").unwrap();
//! assert!(parse(&g, &tokens, IdentityProvider).unwrap().accepted());
//! ```

pub mod difftest;
pub mod grammar;
pub mod lr1;
pub mod oracle;
pub mod parser;
pub mod validity;
