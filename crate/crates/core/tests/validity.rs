mod common;

use std::collections::BTreeSet;

use common::*;
use tlr::grammar::*;
use tlr::lr1::*;
use tlr::oracle::oracle_conservation;
use tlr::validity::*;

const EX_PREFIX: &str = "Q G j Q G j Q G j c c c c B";

/// Values at the example configuration, frozen after agreeing with the tree oracle.
const EX_VALUES: [(&str, i32); 12] = [
    ("S -> H", 1),
    ("H -> Q G r", 2),
    ("H -> A k", 2),
    ("G -> G h", 1),
    ("G -> G j H", 3),
    ("G -> ", -1),
    ("A -> c A D", 4),
    ("A -> B", 2),
    ("D -> ", 1),
    ("B -> b", -1),
    ("Q -> q", -1),
    ("$accept -> S", 1),
];

fn value(g: &Grammar, m: &ConservationMap, p: &str) -> i32 {
    let p = if p.starts_with('$') { g.augmented_production() } else { prod(g, p) };
    m.get(&p).unwrap()
}

fn at(g: &Grammar, prefix: &str, a: &Symbol) -> (ParseTables, ParseStack, ConservationMap) {
    let t = build_tables(g).unwrap();
    let st = restack(&t, &syms(g, prefix)).unwrap();
    let m = compute_conservation(&t, &st, a).unwrap();
    (t, st, m)
}

#[test]
fn example_configuration_values() {
    let g = g_ex();
    let k = Symbol::terminal("k");
    let (_, _, m) = at(&g, EX_PREFIX, &k);
    for (p, v) in EX_VALUES {
        assert_eq!(value(&g, &m, p), v, "{p}");
    }
    assert_eq!(m.len(), g.productions().len() + 1);
    assert_eq!(m, oracle_conservation(&g, &syms(&g, EX_PREFIX), &k).unwrap());
}

#[test]
fn naive_values_after_reducing_b() {
    let g = g_naive();
    let (_, _, m) = at(&g, "B", &Symbol::end());
    assert_eq!(value(&g, &m, "$accept -> S"), 2);
    assert_eq!(value(&g, &m, "S -> B"), 2);
    for p in ["S -> A", "A -> C", "B -> D", "C -> c", "D -> d"] {
        assert_eq!(value(&g, &m, p), -1, "{p}");
    }
    assert_eq!(m, oracle_conservation(&g, &syms(&g, "B"), &Symbol::end()).unwrap());
}

#[test]
fn empty_stack_is_not_a_configuration() {
    let g = g_naive();
    let t = build_tables(&g).unwrap();
    assert_eq!(compute_conservation(&t, &ParseStack::new(), &Symbol::end()), Err(ValidityError::NotAtNonterminalTop));
    let st = restack(&t, &syms(&g, "C")).unwrap();
    assert!(compute_conservation(&t, &st, &Symbol::terminal("x")).is_err());
}

#[test]
fn memoization_does_not_change_results() {
    let g = g_ex();
    let t = build_tables(&g).unwrap();
    let st = restack(&t, &syms(&g, EX_PREFIX)).unwrap();
    let k = Symbol::terminal("k");
    let plain = compute_conservation_with(&t, &st, &k, Options { memoize: false, ..Options::default() }).unwrap();
    assert_eq!(plain, compute_conservation(&t, &st, &k).unwrap());
}

#[test]
fn fuel_exhaustion_is_reported() {
    let g = g_ex();
    let t = build_tables(&g).unwrap();
    let st = restack(&t, &syms(&g, EX_PREFIX)).unwrap();
    let r = compute_conservation_with(&t, &st, &Symbol::terminal("k"), Options { memoize: false, fuel: 3 });
    assert_eq!(r, Err(ValidityError::OutOfFuel));
}

fn item(t: &ParseTables, g: &Grammar, p: &str, dot: usize, la: &Symbol) -> Item {
    let ix = t.index();
    Item { production: ix.production_id(&prod(g, p)).unwrap(), dot, lookahead: ix.index_of(la).unwrap() }
}

fn pair(t: &ParseTables, g: &Grammar, p: &str, count: usize) -> VisitPair {
    let production = if p.starts_with('$') { 0 } else { t.index().production_id(&prod(g, p)).unwrap() };
    VisitPair { production, count }
}

#[test]
fn following_terminal_hit() {
    let g = g_ex();
    let k = Symbol::terminal("k");
    let (t, st, m) = at(&g, "A", &k);
    let it = item(&t, &g, "H -> A k", 1, &Symbol::end());
    assert!(t.state(st.top_state()).contains(&it));
    let (pairs, found) = find_following(&t, &st, &it, &k).unwrap();
    assert!(found);
    assert!(pairs.contains(&pair(&t, &g, "H -> A k", 2)));
    assert_eq!(value(&g, &m, "H -> A k"), 2);
}

#[test]
fn following_other_terminal_stops() {
    let g = g_ex();
    let (t, st, _) = at(&g, "A", &Symbol::terminal("k"));
    let it = item(&t, &g, "H -> A k", 1, &Symbol::end());
    let (pairs, found) = find_following(&t, &st, &it, &Symbol::terminal("r")).unwrap();
    assert!(!found);
    assert!(pairs.is_empty());
}

#[test]
fn completed_item_climbs_to_ancestors() {
    let g = g_naive();
    let (t, st, _) = at(&g, "B", &Symbol::end());
    let it = item(&t, &g, "S -> B", 1, &Symbol::end());
    let (_, found) = find_following(&t, &st, &it, &Symbol::end()).unwrap();
    assert!(found);
    let anc = trace_ancestors(&t, &st, &it, &Symbol::end()).unwrap();
    assert!(anc.contains(&pair(&t, &g, "$accept -> S", 1)), "{anc:?}");
}

#[test]
fn single_layer_ancestors() {
    let g = g_naive();
    let (t, st, m) = at(&g, "C", &Symbol::end());
    let it = item(&t, &g, "A -> C", 1, &Symbol::end());
    // Ancestors record which child leads down to B; the whole-production
    // values come from the forward search.
    let anc = trace_ancestors(&t, &st, &it, &Symbol::end()).unwrap();
    let want: BTreeSet<VisitPair> = [pair(&t, &g, "S -> A", 1), pair(&t, &g, "$accept -> S", 1)].into();
    assert_eq!(anc, want);
    assert_eq!(value(&g, &m, "A -> C"), 2);
    assert_eq!(value(&g, &m, "S -> A"), 2);
    assert_eq!(m, oracle_conservation(&g, &syms(&g, "C"), &Symbol::end()).unwrap());
}

#[test]
fn symbol_traces() {
    let g = g_ex();
    let t = build_tables(&g).unwrap();
    let k = Symbol::terminal("k");
    let tr = t_first_symbol(&t, &k, &k).unwrap();
    assert!(tr.derives_lookahead && !tr.derives_empty && tr.pairs().is_empty());
    let tr = t_first_symbol(&t, &Symbol::terminal("r"), &k).unwrap();
    assert!(!tr.derives_lookahead && !tr.derives_empty);
    let tr = t_first_symbol(&t, &Symbol::nonterminal("D"), &k).unwrap();
    assert!(!tr.derives_lookahead && tr.derives_empty);
    assert_eq!(tr.pairs(), [pair(&t, &g, "D -> ", 1)].into());
    let tr = t_first_symbol(&t, &Symbol::nonterminal("H"), &Symbol::terminal("b")).unwrap();
    assert!(tr.derives_lookahead);
    assert!(tr.lookahead_pairs.contains(&pair(&t, &g, "H -> A k", 1)));
    assert!(tr.lookahead_pairs.contains(&pair(&t, &g, "A -> B", 1)));
    assert!(tr.lookahead_pairs.contains(&pair(&t, &g, "B -> b", 1)));
}

#[test]
fn string_traces() {
    let g = g_ex();
    let t = build_tables(&g).unwrap();
    let k = Symbol::terminal("k");
    let tr = t_first_string(&t, &[], &k).unwrap();
    assert_eq!(tr.k, 1);
    assert!(!tr.derives_lookahead);
    // A is neither nullable nor able to start with k, so the scan stops at it.
    let tr = t_first_string(&t, &syms(&g, "A k"), &k).unwrap();
    assert_eq!(tr.k, -1);
    assert!(!tr.derives_lookahead && tr.lookahead_pairs.is_empty());
    let tr = t_first_string(&t, &syms(&g, "D k"), &k).unwrap();
    assert_eq!(tr.k, 2);
    assert!(tr.derives_lookahead);
    assert!(tr.lookahead_pairs.contains(&pair(&t, &g, "D -> ", 1)));
    let tr = t_first_string(&t, &syms(&g, "D D"), &k).unwrap();
    assert_eq!(tr.k, 3);
    assert!(!tr.derives_lookahead);
    let tr = t_first_string(&t, &syms(&g, "Q k"), &k).unwrap();
    assert_eq!(tr.k, -1);
    assert!(tr.lookahead_pairs.is_empty() && tr.empty_pairs.is_empty());
}

#[test]
fn validity_verdicts() {
    let g = g_naive();
    let (_, _, m) = at(&g, "B", &Symbol::end());
    assert!(is_valid(&g, &Transformation::identity(), &m).is_valid());
    let d0 = parse_transformation_text(&fixture("delta0.tf"), &g).unwrap();
    assert_eq!(is_valid(&g, &d0, &m), Verdict::Invalid(vec![Violation::Removed(prod(&g, "S -> B"))]));
    let add = parse_transformation_text(&fixture("add_unreachable.tf"), &g).unwrap();
    assert!(is_valid(&g, &add, &m).is_valid());
}

#[test]
fn prefix_conservation() {
    let g = parse_grammar_text("%terminals x y z\nS -> A ;\nA -> x y z ;\nB -> y ;").unwrap();
    let p = prod(&g, "A -> x y z");
    let same_prefix = Production::new(p.head.clone(), syms(&g, "x y B"));
    let kept: BTreeSet<&Production> = [&same_prefix].into();
    assert!(conserved_by(&p, 2, &kept));
    assert!(!conserved_by(&p, 3, &kept));
    assert!(!conserved_by(&p, 4, &kept));
    assert!(conserved_by(&p, -1, &BTreeSet::new()));
    let mut m = ConservationMap::free(g.productions());
    m.set(&p, 2);
    let d = Transformation { new_nonterminals: BTreeSet::new(), add: [same_prefix].into(), remove: [p.clone()].into() };
    assert!(is_valid(&g, &d, &m).is_valid());
    m.set(&p, 3);
    assert_eq!(is_valid(&g, &d, &m), Verdict::Invalid(vec![Violation::PrefixLost { production: p, prefix: 3 }]));
}

#[test]
fn map_display_is_tab_separated() {
    let g = g_naive();
    let (_, _, m) = at(&g, "B", &Symbol::end());
    let text = m.to_string();
    assert!(text.starts_with("$accept -> S\t2\n"));
    assert!(text.contains("S -> B\t2\n"));
}
