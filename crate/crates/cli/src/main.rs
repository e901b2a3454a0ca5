use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser as ClapParser, Subcommand};

use tlr::difftest::{self, DiffOptions};
use tlr::grammar::{parse_grammar_text, parse_transformation_text, Grammar, ScriptedProvider, Symbol};
use tlr::lr1::{build_tables, Lr1Error};
use tlr::oracle::{self, OracleError};
use tlr::parser::{Outcome, Parser, ParserError};
use tlr::validity::{conserved_by, is_valid, Verdict};

const OK: u8 = 0;
const USAGE: u8 = 1;
const NOT_LR1: u8 = 2;
const REJECTED: u8 = 3;
const NOTHING_TO_CHECK: u8 = 4;
const MISMATCH: u8 = 5;

#[derive(ClapParser)]
#[command(name = "tlr", version, about = "Transformative LR(1) parsing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical LR(1) item sets and parse table.
    Tables {
        #[arg(short, long)]
        grammar: PathBuf,
    },
    /// Parse a token file, optionally applying scripted transformations.
    Parse {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        tokens: PathBuf,
        /// Transformation files applied at successive transformative reductions.
        #[arg(long, value_delimiter = ',')]
        delta_script: Vec<PathBuf>,
        /// Print every parse event.
        #[arg(long)]
        trace: bool,
        /// Treat each non-empty line of the token file as its own sentence.
        #[arg(long)]
        per_line: bool,
    },
    /// Check one transformation at the first transformative reduction of a prefix.
    CheckDelta {
        #[arg(short, long)]
        grammar: PathBuf,
        #[arg(short, long)]
        tokens: PathBuf,
        #[arg(short, long)]
        delta: PathBuf,
    },
    /// Enumerate the proper simplified trees of a configuration.
    Oracle {
        #[arg(short, long)]
        grammar: PathBuf,
        /// Stack symbol string, ending in a nonterminal.
        #[arg(long)]
        prefix: String,
        #[arg(long)]
        lookahead: String,
        /// Print the trees only if there are at most this many.
        #[arg(long, default_value_t = 100)]
        max_trees: usize,
    },
    /// Compare the conservation computation with the tree oracle on random grammars.
    Difftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 6)]
        max_shifts: usize,
        /// Use a deliberately broken computation (harness self-test).
        #[arg(long, hide = true)]
        mutant: bool,
    },
}

/// A failure that ends the command with an exit code and a message on stderr.
struct Fail(u8, String);

type CmdResult = Result<u8, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(USAGE, msg.into())
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Result<Grammar, Fail> {
    parse_grammar_text(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn not_lr1(e: Lr1Error) -> Fail {
    match e {
        Lr1Error::NotLr1(cs) => {
            let mut msg = String::from("grammar is not LR(1)");
            for c in cs {
                let _ = write!(msg, "\n  {c}");
            }
            Fail(NOT_LR1, msg)
        }
        other => usage(other.to_string()),
    }
}

fn parser_error(e: ParserError) -> Fail {
    match e {
        ParserError::NotLr1(cs) => not_lr1(Lr1Error::NotLr1(cs)),
        other => usage(other.to_string()),
    }
}

fn cmd_tables(grammar: &Path) -> CmdResult {
    let g = load_grammar(grammar)?;
    let t = build_tables(&g).map_err(not_lr1)?;
    print!("{}", t.dump());
    Ok(OK)
}

fn cmd_parse(grammar: &Path, tokens: &Path, script: &[PathBuf], trace: bool, per_line: bool) -> CmdResult {
    let g = load_grammar(grammar)?;
    build_tables(&g).map_err(not_lr1)?;
    let script: Vec<String> = script.iter().map(|p| read(p)).collect::<Result<_, _>>()?;
    let text = read(tokens)?;
    let sentences: Vec<&str> =
        if per_line { text.lines().filter(|l| !l.trim().is_empty()).collect() } else { vec![text.as_str()] };
    let mut code = OK;
    for (i, s) in sentences.iter().enumerate() {
        let toks = g.terminal_string(s).map_err(|e| usage(format!("{}: {e}", tokens.display())))?;
        let result =
            tlr::parser::parse(&g, &toks, ScriptedProvider::new(script.iter().cloned())).map_err(parser_error)?;
        if trace {
            print!("{}", result.trace());
        }
        let verdict = match &result.outcome {
            Outcome::Accepted => "accepted".to_string(),
            Outcome::Rejected(r) => {
                code = REJECTED;
                format!("rejected: {r}")
            }
        };
        if per_line {
            println!("{}\t{verdict}", i + 1);
        } else {
            println!("{verdict}");
        }
    }
    Ok(code)
}

fn cmd_check_delta(grammar: &Path, tokens: &Path, delta: &Path) -> CmdResult {
    let g = load_grammar(grammar)?;
    build_tables(&g).map_err(not_lr1)?;
    let toks = g.terminal_string(&read(tokens)?).map_err(|e| usage(format!("{}: {e}", tokens.display())))?;
    let delta_text = read(delta)?;
    let mut p = Parser::new(&g, &toks, tlr::grammar::IdentityProvider).map_err(parser_error)?;
    while p.pending_transform().is_none() {
        if p.step().is_none() {
            let why = match p.outcome() {
                Some(Outcome::Rejected(r)) => format!("parse rejected before any transformative reduction: {r}"),
                _ => "no transformative reduction in the prefix".to_string(),
            };
            return Err(Fail(NOTHING_TO_CHECK, why));
        }
    }
    let d =
        parse_transformation_text(&delta_text, p.grammar()).map_err(|e| usage(format!("{}: {e}", delta.display())))?;
    let v = p.pending_conservation().expect("stopped at a pending transformation").map_err(|e| usage(e.to_string()))?;
    let mut prefix: Vec<String> = p.stack().symbols().iter().map(|s| s.name().to_string()).collect();
    prefix.push(p.pending_transform().expect("pending").name().to_string());
    println!("# configuration: {} . {}", prefix.join(" "), p.lookahead());
    let kept: std::collections::BTreeSet<_> =
        p.grammar().productions().iter().filter(|q| !d.remove.contains(*q)).chain(d.add.iter()).collect();
    for (prod, val) in v.iter() {
        let status = if prod.is_augmented() || conserved_by(prod, val, &kept) { "ok" } else { "violated" };
        println!("{prod}\t{val}\t{status}");
    }
    match is_valid(p.grammar(), &d, &v) {
        Verdict::Valid => {
            println!("valid");
            Ok(OK)
        }
        Verdict::Invalid(vs) => {
            let parts: Vec<String> = vs.iter().map(|x| x.to_string()).collect();
            println!("invalid: {}", parts.join("; "));
            Ok(REJECTED)
        }
    }
}

fn oracle_error(e: OracleError) -> Fail {
    match e {
        OracleError::NotLr1 => Fail(NOT_LR1, e.to_string()),
        OracleError::NotAViablePrefix { .. } => Fail(REJECTED, e.to_string()),
        other => usage(other.to_string()),
    }
}

fn cmd_oracle(grammar: &Path, prefix: &str, lookahead: &str, max_trees: usize) -> CmdResult {
    let g = load_grammar(grammar)?;
    build_tables(&g).map_err(not_lr1)?;
    let prefix: Vec<Symbol> = g.symbol_string(prefix).map_err(|e| usage(e.to_string()))?;
    let a = if lookahead == Symbol::end().name() {
        Symbol::end()
    } else {
        g.symbol(lookahead)
            .filter(Symbol::is_terminal)
            .ok_or_else(|| usage(format!("unknown terminal `{lookahead}`")))?
    };
    let summary = oracle::summarize_trees(&g, &prefix, &a, 2).map_err(oracle_error)?;
    println!("# proper trees: {}, max height: {}", summary.count, summary.max_height);
    if summary.count <= max_trees as u128 {
        let trees = oracle::enumerate_proper_trees(&g, &prefix, &a).map_err(oracle_error)?;
        for t in &trees {
            println!();
            print!("{}", t.dump());
        }
        println!();
    }
    print!("{}", oracle::conservation_from_summary(&g, &summary));
    Ok(OK)
}

fn cmd_difftest(seed: u64, cases: usize, max_shifts: usize, mutant: bool) -> CmdResult {
    let opts = DiffOptions { max_shifts, ..DiffOptions::new(seed, cases) };
    let f: &difftest::ConservationFn<'_> =
        if mutant { &difftest::mutant_conservation } else { &|t, s, a| tlr::validity::compute_conservation(t, s, a) };
    let report = difftest::run_with(&opts, f);
    print!("{}", report.summary());
    let Some(bad) = report.grammars.iter().find(|g| g.first_mismatch().is_some()) else {
        return Ok(OK);
    };
    let (g, c) = difftest::minimize(&bad.grammar, max_shifts, f).expect("a mismatching grammar minimizes to one");
    println!("# minimized counterexample");
    print!("{}", difftest::counterexample(&g, &c));
    Ok(MISMATCH)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let result = match &cli.command {
        Command::Tables { grammar } => cmd_tables(grammar),
        Command::Parse { grammar, tokens, delta_script, trace, per_line } => {
            cmd_parse(grammar, tokens, delta_script, *trace, *per_line)
        }
        Command::CheckDelta { grammar, tokens, delta } => cmd_check_delta(grammar, tokens, delta),
        Command::Oracle { grammar, prefix, lookahead, max_trees } => cmd_oracle(grammar, prefix, lookahead, *max_trees),
        Command::Difftest { seed, cases, max_shifts, mutant } => cmd_difftest(*seed, *cases, *max_shifts, *mutant),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("tlr: {msg}");
            ExitCode::from(code)
        }
    }
}
