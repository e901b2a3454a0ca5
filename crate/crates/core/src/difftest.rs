//! Differential testing of the conservation computation against the tree
//! oracle on random small LR(1) grammars.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{render, Grammar, Production, Symbol, Transformation};
use crate::lr1::{build_tables, is_lr1, Action, ParseStack, ParseTables};
use crate::oracle::{
    conservation_from_summary, conservation_from_trees, enumerate_trees, height_bound, summarize_trees, EnumOptions,
};
use crate::validity::{compute_conservation, is_valid, ConservationMap, ValidityError};

/// Bounds for random grammars.
#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub terminals: usize,
    pub nonterminals: usize,
    pub max_productions: usize,
    pub max_body: usize,
    /// Largest allowed height of the shortest derivation from the start symbol.
    pub max_depth: usize,
    /// Samples that reduce to fewer productions or nonterminals are rejected.
    pub min_productions: usize,
    pub min_nonterminals: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            terminals: 4,
            nonterminals: 4,
            max_productions: 8,
            max_body: 3,
            max_depth: 8,
            min_productions: 3,
            min_nonterminals: 2,
        }
    }
}

const TERMINAL_NAMES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];
const NONTERMINAL_NAMES: [&str; 8] = ["S", "A", "B", "C", "D", "E", "F", "G"];

/// Rejection-samples a reduced LR(1) grammar with a nonempty language.
pub fn random_grammar<R: Rng>(rng: &mut R, params: &GenParams) -> Grammar {
    loop {
        if let Some(g) = sample_grammar(rng, params) {
            return g;
        }
    }
}

fn sample_grammar<R: Rng>(rng: &mut R, params: &GenParams) -> Option<Grammar> {
    let nt = rng.gen_range(1..=params.nonterminals.min(NONTERMINAL_NAMES.len()));
    let tt = rng.gen_range(1..=params.terminals.min(TERMINAL_NAMES.len()));
    let terminals: Vec<Symbol> = TERMINAL_NAMES[..tt].iter().map(|n| Symbol::terminal(n)).collect();
    let nonterminals: Vec<Symbol> = NONTERMINAL_NAMES[..nt].iter().map(|n| Symbol::nonterminal(n)).collect();
    let alphabet: Vec<Symbol> = terminals.iter().chain(&nonterminals).cloned().collect();
    let count = rng.gen_range(nt.max(2)..=params.max_productions.max(nt.max(2)));
    let mut productions = Vec::with_capacity(count);
    for i in 0..count {
        // Every nonterminal gets a first production so that few samples are wasted.
        let head = if i < nt { nonterminals[i].clone() } else { nonterminals.choose(rng)?.clone() };
        let len = rng.gen_range(0..=params.max_body);
        let body = (0..len).map(|_| alphabet.choose(rng).cloned()).collect::<Option<Vec<_>>>()?;
        productions.push(Production::new(head, body));
    }
    let g = Grammar::new(terminals, nonterminals.clone(), productions, nonterminals[0].clone(), []).ok()?;
    let g = reduce(&g)?;
    if g.productions().len() < params.min_productions || g.nonterminals().len() < params.min_nonterminals {
        return None;
    }
    if min_heights(&g).get(g.start()).is_none_or(|&h| h > params.max_depth) {
        return None;
    }
    is_lr1(&g).0.then_some(g)
}

/// Height of the shortest derivation tree of each productive symbol.
pub fn min_heights(g: &Grammar) -> BTreeMap<Symbol, usize> {
    let mut h: BTreeMap<Symbol, usize> = g.terminals().iter().map(|t| (t.clone(), 0)).collect();
    loop {
        let mut changed = false;
        for p in g.productions() {
            let Some(m) = p.body.iter().map(|x| h.get(x).copied()).try_fold(0, |acc, v| v.map(|v| acc.max(v))) else {
                continue;
            };
            let e = h.entry(p.head.clone()).or_insert(usize::MAX);
            if m + 1 < *e {
                *e = m + 1;
                changed = true;
            }
        }
        if !changed {
            return h;
        }
    }
}

/// Drops unproductive and unreachable productions and unused symbols, keeping
/// transformative marks. `None` when the start symbol is unproductive.
pub fn reduce(g: &Grammar) -> Option<Grammar> {
    let productive = g.productive_symbols();
    if !productive.contains(g.start()) {
        return None;
    }
    let live: Vec<Production> =
        g.productions().iter().filter(|p| p.body.iter().all(|x| productive.contains(x))).cloned().collect();
    let trimmed =
        Grammar::new(g.terminals().iter().cloned(), g.nonterminals().iter().cloned(), live, g.start().clone(), [])
            .expect("subset of a valid grammar");
    let reach = trimmed.reachable_symbols();
    let kept: Vec<Production> = trimmed.productions().iter().filter(|p| reach.contains(&p.head)).cloned().collect();
    let terminals = g.terminals().iter().filter(|t| !t.is_end() && reach.contains(*t)).cloned();
    let nonterminals = g.nonterminals().iter().filter(|n| reach.contains(*n)).cloned();
    let transformative: Vec<Production> = g.transformative().iter().filter(|p| kept.contains(p)).cloned().collect();
    Grammar::new(terminals, nonterminals, kept, g.start().clone(), transformative).ok()
}

/// A reduce point reached by the LR(1) automaton: the stack symbol string
/// right after pushing the reduced head, and the pending lookahead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub prefix: Vec<Symbol>,
    pub lookahead: Symbol,
    /// The production just reduced.
    pub production: Production,
    /// Tokens read to get here, lookahead included.
    pub tokens: Vec<Symbol>,
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} . {} (after {})", join(&self.prefix), self.lookahead, self.production)
    }
}

fn join(xs: &[Symbol]) -> String {
    xs.iter().map(Symbol::name).collect::<Vec<_>>().join(" ")
}

/// Applies reductions for lookahead `a` until the automaton shifts, accepts
/// or fails. Returns the reduced productions and the final action.
fn reduce_chain(
    t: &ParseTables,
    stack: &mut ParseStack,
    a: usize,
    mut on_reduce: impl FnMut(&ParseStack, usize),
) -> Action {
    loop {
        match t.action_at(stack.top_state(), a) {
            Action::Reduce(p) => {
                let head = t.index().head(p);
                stack.pop(t.index().body(p).len());
                let Some(s) = t.goto_at(stack.top_state(), head) else { return Action::Error };
                stack.push(s, t.index().symbol(head).clone());
                on_reduce(stack, p);
            }
            other => return other,
        }
    }
}

/// Number of reductions performed from `stack` before `a` is shifted or the
/// input accepted; `None` if the automaton reports an error first.
pub fn reductions_until_shift(t: &ParseTables, stack: &ParseStack, a: &Symbol) -> Option<usize> {
    let a = t.index().index_of(a).filter(|&i| t.index().is_terminal(i))?;
    let mut stack = stack.clone();
    let mut n = 0;
    match reduce_chain(t, &mut stack, a, |_, _| n += 1) {
        Action::Shift(_) | Action::Accept => Some(n),
        _ => None,
    }
}

/// Every reduce point reachable by reading at most `max_shifts` tokens before
/// the lookahead, one per distinct (stack string, lookahead), in BFS order.
pub fn reduce_points(t: &ParseTables, max_shifts: usize) -> Vec<Config> {
    let idx = t.index();
    let mut out = Vec::new();
    let mut seen_cfg: HashSet<(Vec<Symbol>, usize)> = HashSet::new();
    let mut seen_stack: HashSet<Vec<usize>> = HashSet::new();
    let mut queue: VecDeque<(ParseStack, Vec<Symbol>)> = VecDeque::from([(ParseStack::new(), Vec::new())]);
    while let Some((stack, tokens)) = queue.pop_front() {
        for a in 0..idx.n_terminals() {
            let mut st = stack.clone();
            let sym = idx.symbol(a).clone();
            let mut read = tokens.clone();
            read.push(sym.clone());
            let action = reduce_chain(t, &mut st, a, |s, p| {
                let prefix = s.symbols();
                if seen_cfg.insert((prefix.clone(), a)) {
                    out.push(Config {
                        prefix,
                        lookahead: sym.clone(),
                        production: idx.production(p).clone(),
                        tokens: read.clone(),
                    });
                }
            });
            if let Action::Shift(s) = action {
                if tokens.len() < max_shifts {
                    st.push(s, sym.clone());
                    let key: Vec<usize> = st.entries().iter().map(|e| e.state).collect();
                    if seen_stack.insert(key) {
                        queue.push_back((st, read));
                    }
                }
            }
        }
    }
    out
}

/// Signature of the conservation computation under test.
pub type ConservationFn<'a> = dyn Fn(&ParseTables, &ParseStack, &Symbol) -> Result<ConservationMap, ValidityError> + 'a;

/// Outcome of one configuration.
#[derive(Clone, Debug)]
pub struct ConfigCheck {
    pub config: Config,
    pub computed: Result<ConservationMap, String>,
    pub oracle: Result<ConservationMap, String>,
    pub trees: u128,
    pub max_height: usize,
    pub height_bound: usize,
    /// Whether Δe passes the validity test against the computed map.
    pub identity_valid: bool,
    /// For small tree sets: whether building every tree gives the same
    /// count, height and map as the summary.
    pub materialized_agrees: Option<bool>,
}

impl ConfigCheck {
    pub fn agrees(&self) -> bool {
        matches!((&self.computed, &self.oracle), (Ok(a), Ok(b)) if a == b) && self.materialized_agrees != Some(false)
    }

    pub fn within_bound(&self) -> bool {
        self.max_height <= self.height_bound
    }

    /// Productions whose values differ, as (production, computed, oracle).
    pub fn differences(&self) -> Vec<(Production, i32, i32)> {
        let (Ok(a), Ok(b)) = (&self.computed, &self.oracle) else { return Vec::new() };
        a.iter()
            .filter_map(|(p, x)| {
                let y = b.get(p).unwrap_or(-1);
                (x != y).then(|| (p.clone(), x, y))
            })
            .collect()
    }
}

/// Tree sets up to this size are also built in full to cross-check the summary.
pub const MATERIALIZE_LIMIT: usize = 20_000;

/// Runs both computations on one configuration.
pub fn check_config(g: &Grammar, t: &ParseTables, c: &Config, f: &ConservationFn<'_>) -> ConfigCheck {
    let stack = crate::lr1::restack(t, &c.prefix);
    let computed = match &stack {
        Ok(s) => f(t, s, &c.lookahead).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    let identity_valid = computed.as_ref().is_ok_and(|v| is_valid(g, &Transformation::identity(), v).is_valid());
    let summary = summarize_trees(g, &c.prefix, &c.lookahead, 2);
    let (oracle, trees, max_height) = match &summary {
        Ok(s) => (Ok(conservation_from_summary(g, s)), s.count, s.max_height),
        Err(e) => (Err(e.to_string()), 0, 0),
    };
    let materialized_agrees = match &oracle {
        Ok(map) if trees <= MATERIALIZE_LIMIT as u128 => {
            let opts = EnumOptions { max_repeats: 2, limit: MATERIALIZE_LIMIT };
            Some(enumerate_trees(g, &c.prefix, &c.lookahead, opts).is_ok_and(|ts| {
                ts.len() as u128 == trees
                    && ts.iter().map(|t| t.tree.height()).max().unwrap_or(0) == max_height
                    && conservation_from_trees(g, &ts) == *map
            }))
        }
        _ => None,
    };
    ConfigCheck {
        config: c.clone(),
        computed,
        oracle,
        trees,
        max_height,
        height_bound: height_bound(g, c.prefix.len()),
        identity_valid,
        materialized_agrees,
    }
}

/// All configurations of one grammar.
#[derive(Clone, Debug)]
pub struct GrammarCheck {
    pub grammar: Grammar,
    pub checks: Vec<ConfigCheck>,
}

impl GrammarCheck {
    pub fn first_mismatch(&self) -> Option<&ConfigCheck> {
        self.checks.iter().find(|c| !c.agrees())
    }
}

pub fn check_grammar(g: &Grammar, max_shifts: usize, f: &ConservationFn<'_>) -> GrammarCheck {
    let t = build_tables(g).expect("difftest grammars are LR(1)");
    let checks = reduce_points(&t, max_shifts).iter().map(|c| check_config(g, &t, c, f)).collect();
    GrammarCheck { grammar: g.clone(), checks }
}

/// Greedily removes productions while some configuration still disagrees.
/// Returns the smallest grammar found and its shortest disagreeing check.
pub fn minimize(g: &Grammar, max_shifts: usize, f: &ConservationFn<'_>) -> Option<(Grammar, ConfigCheck)> {
    let shortest = |gc: &GrammarCheck| {
        gc.checks.iter().filter(|c| !c.agrees()).min_by_key(|c| (c.config.tokens.len(), c.config.prefix.len())).cloned()
    };
    let mut best = shortest(&check_grammar(g, max_shifts, f)).map(|c| (g.clone(), c))?;
    'outer: loop {
        let cur = best.0.clone();
        for p in cur.productions() {
            let productions: Vec<Production> = cur.productions().iter().filter(|q| *q != p).cloned().collect();
            let candidate = Grammar::new(
                cur.terminals().iter().cloned(),
                cur.nonterminals().iter().cloned(),
                productions,
                cur.start().clone(),
                cur.transformative().iter().filter(|q| *q != p).cloned(),
            )
            .ok()
            .and_then(|g| reduce(&g))
            .filter(|g| is_lr1(g).0);
            let Some(candidate) = candidate else { continue };
            if let Some(c) = shortest(&check_grammar(&candidate, max_shifts, f)) {
                best = (candidate, c);
                continue 'outer;
            }
        }
        return Some(best);
    }
}

/// Settings for a difftest run.
#[derive(Clone, Copy, Debug)]
pub struct DiffOptions {
    pub seed: u64,
    pub cases: usize,
    pub max_shifts: usize,
    pub params: GenParams,
}

impl DiffOptions {
    pub fn new(seed: u64, cases: usize) -> Self {
        DiffOptions { seed, cases, max_shifts: 6, params: GenParams::default() }
    }
}

/// The grammar of case `i`; each case has its own RNG stream.
pub fn case_grammar(seed: u64, i: usize, params: &GenParams) -> Grammar {
    let mut rng = case_rng(seed, i);
    random_grammar(&mut rng, params)
}

pub fn case_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

#[derive(Clone, Debug, Default)]
pub struct DiffReport {
    pub seed: u64,
    pub grammars: Vec<GrammarCheck>,
}

impl DiffReport {
    pub fn configs(&self) -> impl Iterator<Item = &ConfigCheck> {
        self.grammars.iter().flat_map(|g| g.checks.iter())
    }

    pub fn config_count(&self) -> usize {
        self.configs().count()
    }

    pub fn mismatches(&self) -> usize {
        self.configs().filter(|c| !c.agrees()).count()
    }

    pub fn incomplete(&self) -> usize {
        self.configs().filter(|c| c.oracle.is_err()).count()
    }

    pub fn identity_failures(&self) -> usize {
        self.configs().filter(|c| !c.identity_valid).count()
    }

    pub fn bound_violations(&self) -> usize {
        self.configs().filter(|c| !c.within_bound()).count()
    }

    pub fn trees(&self) -> u128 {
        self.configs().map(|c| c.trees).fold(0, u128::saturating_add)
    }

    /// Configurations whose tree sets were also built in full.
    pub fn materialized(&self) -> usize {
        self.configs().filter(|c| c.materialized_agrees.is_some()).count()
    }

    /// Deterministic one-paragraph summary.
    pub fn summary(&self) -> String {
        format!(
            "seed {}: {} grammars, {} configurations ({} built in full), {} trees, {} mismatches, {} incomplete enumerations, {} identity failures, {} height-bound violations\n",
            self.seed,
            self.grammars.len(),
            self.config_count(),
            self.materialized(),
            self.trees(),
            self.mismatches(),
            self.incomplete(),
            self.identity_failures(),
            self.bound_violations(),
        )
    }
}

/// Runs the comparison with the production conservation computation.
pub fn run(opts: &DiffOptions) -> DiffReport {
    run_with(opts, &|t, s, a| compute_conservation(t, s, a))
}

/// A deliberately wrong computation for checking that the harness catches
/// errors: entirely conserved productions are reported as unconstrained.
pub fn mutant_conservation(t: &ParseTables, s: &ParseStack, a: &Symbol) -> Result<ConservationMap, ValidityError> {
    let mut v = compute_conservation(t, s, a)?;
    let entire: Vec<Production> =
        v.iter().filter(|(p, x)| !p.is_augmented() && *x == p.entire() as i32).map(|(p, _)| p.clone()).collect();
    for p in entire {
        v.set(&p, -1);
    }
    Ok(v)
}

pub fn run_with(opts: &DiffOptions, f: &ConservationFn<'_>) -> DiffReport {
    let grammars =
        (0..opts.cases).map(|i| check_grammar(&case_grammar(opts.seed, i, &opts.params), opts.max_shifts, f)).collect();
    DiffReport { seed: opts.seed, grammars }
}

/// A reproducible description of one disagreement: the grammar file, the
/// tokens that reach the configuration, and the differing values.
pub fn counterexample(g: &Grammar, c: &ConfigCheck) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# grammar");
    out.push_str(&render(g));
    let _ = writeln!(out, "# tokens (last one is the lookahead)");
    let _ = writeln!(out, "{}", join(&c.config.tokens));
    let _ = writeln!(out, "# configuration");
    let _ = writeln!(out, "{}", c.config);
    if c.materialized_agrees == Some(false) {
        let _ = writeln!(out, "# the tree summary disagrees with the full tree set");
    }
    match (&c.computed, &c.oracle) {
        (Ok(_), Ok(_)) => {
            let _ = writeln!(out, "# production\tcomputed\toracle");
            for (p, x, y) in c.differences() {
                let _ = writeln!(out, "{p}\t{x}\t{y}");
            }
        }
        (a, b) => {
            let show = |r: &Result<ConservationMap, String>| match r {
                Ok(_) => "ok".to_string(),
                Err(e) => e.clone(),
            };
            let _ = writeln!(out, "# computed: {}", show(a));
            let _ = writeln!(out, "# oracle: {}", show(b));
        }
    }
    out
}

/// A random transformation for `g`: removes non-transformative productions
/// (mostly ones the map leaves unconstrained), adds up to two productions and
/// sometimes a fresh nonterminal. The result may or may not be valid.
pub fn random_transformation<R: Rng>(rng: &mut R, g: &Grammar, v: &ConservationMap) -> Transformation {
    let mut d = Transformation::identity();
    let fresh = (0..).map(|i| format!("N{i}")).find(|n| g.symbol(n).is_none()).expect("unbounded");
    let fresh = Symbol::nonterminal(&fresh);
    if rng.gen_bool(0.3) {
        d.new_nonterminals.insert(fresh);
    }
    for p in g.productions() {
        if g.is_transformative(p) {
            continue;
        }
        let free = v.get(p).unwrap_or(-1) < 1;
        if rng.gen_bool(if free { 0.4 } else { 0.1 }) {
            d.remove.insert(p.clone());
        }
    }
    let heads: Vec<Symbol> = g.nonterminals().iter().chain(&d.new_nonterminals).cloned().collect();
    let alphabet: Vec<Symbol> = g.terminals().iter().filter(|t| !t.is_end()).chain(heads.iter()).cloned().collect();
    for _ in 0..rng.gen_range(0..=2) {
        let head = heads.choose(rng).expect("grammar has nonterminals").clone();
        let body: Vec<Symbol> = (0..rng.gen_range(0..=3)).filter_map(|_| alphabet.choose(rng).cloned()).collect();
        let p = Production::new(head, body);
        if !g.contains(&p) {
            d.add.insert(p);
        }
    }
    d
}

/// One random transformation tried at a configuration.
#[derive(Clone, Debug)]
pub struct TransformTrial {
    pub config: Config,
    pub transformation: Transformation,
    pub valid: bool,
    /// Whether ΔG is LR(1) with every reachable nonterminal productive; only
    /// computed for valid transformations.
    pub lr1: Option<bool>,
    /// Whether the prefix is a viable prefix of ΔG.
    pub restacked: Option<bool>,
    /// Reductions before the lookahead shift from the prefix, old tables.
    pub before: Option<usize>,
    /// The same count in ΔG; `None` if ΔG errs on the lookahead.
    pub after: Option<usize>,
}

impl TransformTrial {
    /// A valid transformation to an LR(1) grammar that was applied.
    pub fn applied(&self) -> bool {
        self.valid && self.lr1 == Some(true)
    }

    /// Restack succeeded and the lookahead is eventually shifted.
    pub fn continues(&self) -> bool {
        self.restacked == Some(true) && self.after.is_some()
    }

    /// Post-transformation reductions before the shift equal the old count
    /// from the prefix, i.e. one less than from before the reduction.
    pub fn monotone(&self) -> bool {
        self.before.is_some() && self.before == self.after
    }
}

/// Draws `per_config` random transformations at each configuration.
pub fn transform_trials<R: Rng>(rng: &mut R, g: &Grammar, max_shifts: usize, per_config: usize) -> Vec<TransformTrial> {
    let t = build_tables(g).expect("difftest grammars are LR(1)");
    let mut out = Vec::new();
    for c in reduce_points(&t, max_shifts) {
        let stack = crate::lr1::restack(&t, &c.prefix).expect("reduce point is viable");
        let Ok(v) = compute_conservation(&t, &stack, &c.lookahead) else { continue };
        let before = reductions_until_shift(&t, &stack, &c.lookahead);
        for _ in 0..per_config {
            let d = random_transformation(rng, g, &v);
            let valid = is_valid(g, &d, &v).is_valid();
            let mut trial = TransformTrial {
                config: c.clone(),
                transformation: d,
                valid,
                lr1: None,
                restacked: None,
                before,
                after: None,
            };
            if valid {
                let ng = g.apply(&trial.transformation).expect("checked transformation applies");
                match build_tables(&ng) {
                    Ok(_) if !ng.unproductive_reachable().is_empty() => trial.lr1 = Some(false),
                    Ok(nt) => {
                        trial.lr1 = Some(true);
                        let ns = crate::lr1::restack(&nt, &c.prefix);
                        trial.restacked = Some(ns.is_ok());
                        trial.after = ns.ok().and_then(|ns| reductions_until_shift(&nt, &ns, &c.lookahead));
                    }
                    Err(_) => trial.lr1 = Some(false),
                }
            }
            out.push(trial);
        }
    }
    out
}

/// Marks each production transformative with probability `p`.
pub fn mark_transformative<R: Rng>(rng: &mut R, g: &Grammar, p: f64) -> Grammar {
    let marks: Vec<Production> = g.productions().iter().filter(|_| rng.gen_bool(p)).cloned().collect();
    Grammar::new(
        g.terminals().iter().cloned(),
        g.nonterminals().iter().cloned(),
        g.productions().iter().cloned(),
        g.start().clone(),
        marks,
    )
    .expect("same grammar, marks drawn from P")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar_text;

    #[test]
    fn generated_grammars_are_reduced_lr1() {
        for i in 0..30 {
            let g = case_grammar(7, i, &GenParams::default());
            assert!(is_lr1(&g).0);
            assert!(g.productions().len() <= 8);
            assert!(reduce(&g).is_some_and(|r| r.productions().len() == g.productions().len()));
        }
    }

    #[test]
    fn case_grammars_are_deterministic() {
        let p = GenParams::default();
        assert_eq!(render(&case_grammar(3, 5, &p)), render(&case_grammar(3, 5, &p)));
    }

    #[test]
    fn reduce_points_of_naive() {
        let g = parse_grammar_text("%terminals c d\nS -> A | B ;\nA -> C ;\nB -> D ;\nC -> c ;\nD -> d ;").unwrap();
        let t = build_tables(&g).unwrap();
        let pts = reduce_points(&t, 6);
        let shown: Vec<String> = pts.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            shown,
            [
                "C . $end (after C -> c)",
                "A . $end (after A -> C)",
                "S . $end (after S -> A)",
                "D . $end (after D -> d)",
                "B . $end (after B -> D)",
            ]
        );
        let st = crate::lr1::restack(&t, &g.symbol_string("B").unwrap()).unwrap();
        assert_eq!(reductions_until_shift(&t, &st, &Symbol::end()), Some(1));
    }
}
