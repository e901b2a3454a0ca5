mod common;

use std::collections::HashSet;

use common::*;
use proptest::prelude::*;
use tlr::difftest::{case_grammar, reduce_points, GenParams};
use tlr::grammar::*;
use tlr::lr1::{build_tables, restack};
use tlr::oracle::*;

const EX_PREFIX: &str = "Q G j Q G j Q G j c c c c B";

fn example_tree() -> (Grammar, ParseTree) {
    let g = g_ex();
    let x = g.terminal_string(fixture("g_ex.tok").trim()).unwrap();
    let t = derive_parse_tree(&g, &x).unwrap();
    (g, t)
}

fn find(t: &ParseTree, p: &Production) -> usize {
    (0..t.len()).find(|&n| t.node(n).label == Label::Production(p.clone())).unwrap()
}

fn count_label(t: &ParseTree, p: &Production) -> usize {
    t.nodes().iter().filter(|n| n.label == Label::Production(p.clone())).count()
}

/// |βB| for the configuration in which node `n` has just been reduced.
fn prefix_len(t: &ParseTree, n: usize) -> usize {
    let mut len = 1;
    let mut child = n;
    for a in t.ancestors(n) {
        len += t.node(a).children.iter().position(|&c| c == child).unwrap();
        child = a;
    }
    len
}

fn production_of(g: &Grammar, l: &Label) -> Option<Production> {
    match l {
        Label::Production(p) if p.head == Symbol::accept() => Some(g.augmented_production()),
        Label::Production(p) => Some(p.clone()),
        _ => None,
    }
}

#[test]
fn golden_parse_tree() {
    let (_, t) = example_tree();
    assert_eq!(t.dump(), fixture("g_ex.tree"));
    assert!(t.is_parse_complete());
}

#[test]
fn small_parse_tree() {
    let g = parse_grammar_text("%terminals a b\nS -> a S b | ;").unwrap();
    let t = derive_parse_tree(&g, &syms(&g, "a a b b")).unwrap();
    assert_eq!(t.dump(), "S -> a S b\n  a\n  S -> a S b\n    a\n    S -> ε\n      ε\n    b\n  b\n");
}

#[test]
fn sentence_outside_language() {
    let g = g_naive();
    assert!(matches!(
        derive_parse_tree(&g, &g.terminal_string("c d").unwrap()),
        Err(OracleError::NotInLanguage { .. })
    ));
}

#[test]
fn example_simplified_and_proper_trees() {
    let (g, t) = example_tree();
    let b = find(&t, &prod(&g, "B -> b"));
    assert_eq!(prefix_len(&t, b), 14);
    let st = simplify(&g, &t, 14, b).unwrap();
    let mut want = syms(&g, EX_PREFIX);
    want.push(Symbol::terminal("k"));
    assert_eq!(st.tree.yield_symbols(), want);
    let gh = prod(&g, "G -> G h");
    assert_eq!(count_label(&st.tree, &gh), 3);
    assert!(!st.is_proper_above_b());
    let p = make_proper(&st);
    assert_eq!(count_label(&p.tree, &gh), 2);
    assert_eq!(count_label(&p.tree, &prod(&g, "A -> c A D")), 4);
    assert!(p.is_proper_above_b() && p.is_proper_above_a());
    assert_eq!(p.dump(), fixture("g_ex.proper"));
    assert_eq!(make_proper(&p), p);
    let trees = enumerate_proper_trees(&g, &want[..14], &want[14]).unwrap();
    assert!(trees.iter().any(|x| x.dump() == p.dump()));
}

#[test]
fn simplify_rejects_bad_boundaries() {
    let (g, t) = example_tree();
    let b = find(&t, &prod(&g, "B -> b"));
    assert!(matches!(simplify(&g, &t, 40, b), Err(OracleError::BoundaryMismatch(_))));
}

#[test]
fn example_tree_set() {
    let g = g_ex();
    let k = Symbol::terminal("k");
    let prefix = syms(&g, EX_PREFIX);
    let trees = enumerate_proper_trees(&g, &prefix, &k).unwrap();
    assert_eq!(trees.len(), 6859);
    assert!(trees.iter().all(|t| t.is_proper_above_b() && t.is_proper_above_a()));
    let s = summarize_trees(&g, &prefix, &k, 2).unwrap();
    assert_eq!(s.count, 6859);
    assert_eq!(s.max_height, trees.iter().map(|t| t.tree.height()).max().unwrap());
    assert!(s.max_height <= height_bound(&g, prefix.len()));
    assert_eq!(conservation_from_summary(&g, &s), conservation_from_trees(&g, &trees));
    let distinct: HashSet<String> = trees.iter().map(|t| t.dump()).collect();
    assert_eq!(distinct.len(), trees.len());
}

#[test]
fn naive_tree_set() {
    let g = g_naive();
    let trees = enumerate_proper_trees(&g, &syms(&g, "B"), &Symbol::end()).unwrap();
    assert_eq!(trees.len(), 1);
    assert_eq!(trees[0].dump(), "$accept -> S $end\n  S -> B\n    B\n  $end\n");
    assert!(enumerate_proper_trees(&g, &syms(&g, "B"), &Symbol::terminal("c")).unwrap().is_empty());
    assert!(matches!(
        enumerate_proper_trees(&g, &syms(&g, "A B"), &Symbol::end()),
        Err(OracleError::NotAViablePrefix { .. })
    ));
    assert!(matches!(
        enumerate_proper_trees(&g, &syms(&g, "C c"), &Symbol::end()),
        Err(OracleError::PrefixNotAtNonterminal)
    ));
}

#[test]
fn enumeration_limit_is_an_error() {
    let g = g_ex();
    let r =
        enumerate_trees(&g, &syms(&g, EX_PREFIX), &Symbol::terminal("k"), EnumOptions { max_repeats: 2, limit: 100 });
    assert_eq!(r.unwrap_err(), OracleError::TooManyTrees(100));
}

#[test]
fn start_production_is_entirely_conserved() {
    let g = g_naive();
    for p in ["A", "B", "C", "D", "S"] {
        let m = oracle_conservation(&g, &syms(&g, p), &Symbol::end()).unwrap();
        assert_eq!(m.get(&g.augmented_production()), Some(2), "{p}");
    }
}

/// Checks every reduce point of every short sentence of `g`.
fn check_sentences(g: &Grammar, max_len: usize) -> Result<usize, String> {
    let t = build_tables(g).unwrap();
    let mut checked = 0;
    for w in strings(g, max_len) {
        if !lr_accepts(&t, &w) {
            continue;
        }
        let tree = derive_parse_tree(g, &w).map_err(|e| e.to_string())?;
        for n in 0..tree.len() {
            if !matches!(tree.node(n).label, Label::Production(_)) {
                continue;
            }
            let st = simplify(g, &tree, prefix_len(&tree, n), n).map_err(|e| e.to_string())?;
            let y = st.tree.yield_symbols();
            let (prefix, a) = y.split_at(y.len() - 1);
            restack(&t, prefix).map_err(|e| format!("{w:?}: {e}"))?;
            let summary = summarize_trees(g, prefix, &a[0], 2).map_err(|e| e.to_string())?;
            let z = conservation_from_summary(g, &summary);
            // No simplified tree exceeds the proper-tree values.
            for (m, h) in st.h_values() {
                let p = production_of(g, &st.tree.node(m).label).unwrap();
                if h > z.get(&p).unwrap() {
                    return Err(format!("{w:?}: {p} has H {h} above {}", z.get(&p).unwrap()));
                }
                // Projection that keeps (p, h) reaches a proper tree with the same value.
                let label = st.tree.node(m).label.clone();
                let Label::Production(raw) = label else { unreachable!() };
                let kept = project(&st, &rho_keep(raw.clone(), h));
                if !(kept.is_proper_above_b() && kept.is_proper_above_a()) {
                    return Err(format!("{w:?}: projection keeping {p}/{h} is not proper"));
                }
                if !kept
                    .h_values()
                    .iter()
                    .any(|&(k, v)| v == h && kept.tree.node(k).label == Label::Production(raw.clone()))
                {
                    return Err(format!("{w:?}: projection lost {p} with H {h}"));
                }
            }
            let proper = make_proper(&st);
            if summary.count <= 5000 {
                let set = enumerate_proper_trees(g, prefix, &a[0]).map_err(|e| e.to_string())?;
                if !set.iter().any(|x| x.dump() == proper.dump()) {
                    return Err(format!("{w:?}: proper projection not enumerated\n{}", proper.dump()));
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}

#[test]
fn naive_sentences() {
    let n = check_sentences(&g_naive(), 3).unwrap();
    assert!(n > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn simplified_trees_project_into_the_proper_set(seed in 0u64..1_000_000) {
        let g = case_grammar(seed, 3, &GenParams::default());
        let r = check_sentences(&g, 5);
        prop_assert!(r.is_ok(), "{}\n{}", render(&g), r.unwrap_err());
    }

    #[test]
    fn a_third_repeat_adds_no_values(seed in 0u64..1_000_000) {
        let g = case_grammar(seed, 4, &GenParams::default());
        let t = build_tables(&g).unwrap();
        for c in reduce_points(&t, 4) {
            let two = summarize_trees(&g, &c.prefix, &c.lookahead, 2).unwrap();
            let three = summarize_trees(&g, &c.prefix, &c.lookahead, 3).unwrap();
            prop_assert_eq!(&two.values, &three.values, "{}\n{}", render(&g), c);
            prop_assert!(three.count >= two.count);
        }
    }

    #[test]
    fn summaries_match_materialized_sets(seed in 0u64..1_000_000) {
        let g = case_grammar(seed, 5, &GenParams::default());
        let t = build_tables(&g).unwrap();
        for c in reduce_points(&t, 4) {
            let s = summarize_trees(&g, &c.prefix, &c.lookahead, 2).unwrap();
            if s.count > 20_000 {
                continue;
            }
            let trees = enumerate_proper_trees(&g, &c.prefix, &c.lookahead).unwrap();
            prop_assert_eq!(trees.len() as u128, s.count);
            prop_assert_eq!(conservation_from_trees(&g, &trees), conservation_from_summary(&g, &s));
            prop_assert!(trees.iter().all(|t| t.is_proper_above_b() && t.is_proper_above_a()));
        }
    }
}
