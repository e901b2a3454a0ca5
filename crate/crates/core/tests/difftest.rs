mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tlr::difftest::*;
use tlr::grammar::parse_grammar_text;
use tlr::lr1::{build_tables, is_lr1, restack};
use tlr::validity::compute_conservation;

fn small(seed: u64, cases: usize) -> DiffOptions {
    DiffOptions { max_shifts: 4, ..DiffOptions::new(seed, cases) }
}

#[test]
fn conservation_agrees_with_the_oracle() {
    let r = run(&small(11, 40));
    assert_eq!(r.grammars.len(), 40);
    assert!(r.config_count() > 0);
    assert_eq!(r.mismatches(), 0, "{}", r.summary());
    assert_eq!(r.incomplete(), 0);
    assert_eq!(r.identity_failures(), 0);
    assert_eq!(r.bound_violations(), 0);
    assert!(r.materialized() > 0);
    assert!(r.configs().all(|c| c.materialized_agrees != Some(false)));
}

#[test]
fn runs_are_deterministic() {
    let a = run(&small(3, 15));
    let b = run(&small(3, 15));
    assert_eq!(a.summary(), b.summary());
    let c = run(&small(4, 15));
    assert_ne!(a.summary(), c.summary());
    assert_eq!(case_grammar(3, 7, &GenParams::default()), case_grammar(3, 7, &GenParams::default()));
}

#[test]
fn mutant_is_caught_and_minimized() {
    let r = run_with(&small(1, 40), &mutant_conservation);
    assert!(r.mismatches() > 0);
    let bad = r.grammars.iter().find(|g| g.first_mismatch().is_some()).unwrap();
    let (g, c) = minimize(&bad.grammar, 4, &mutant_conservation).unwrap();
    assert!(g.productions().len() <= bad.grammar.productions().len());
    assert!(!c.agrees());
    let text = counterexample(&g, &c);
    let back = parse_grammar_text(text.split("# tokens").next().unwrap().trim_start_matches("# grammar\n")).unwrap();
    assert_eq!(back.productions(), g.productions());
}

#[test]
fn reduce_points_are_reachable_configurations() {
    for i in 0..20 {
        let g = case_grammar(5, i, &GenParams::default());
        let t = build_tables(&g).unwrap();
        for c in reduce_points(&t, 4) {
            let s = restack(&t, &c.prefix).unwrap();
            assert!(c.prefix.last().unwrap().is_nonterminal());
            assert!(c.tokens.last() == Some(&c.lookahead));
            assert!(reductions_until_shift(&t, &s, &c.lookahead).is_some(), "{c}");
            assert!(compute_conservation(&t, &s, &c.lookahead).is_ok());
        }
    }
}

#[test]
fn corpus_grammars_are_reduced_lr1() {
    let p = GenParams::default();
    for i in 0..50 {
        let g = case_grammar(9, i, &p);
        assert!(is_lr1(&g).0);
        assert!(g.productions().len() >= p.min_productions);
        assert!(g.nonterminals().len() >= p.min_nonterminals);
        assert!(g.unproductive_reachable().is_empty());
    }
}

#[test]
fn applied_transformations_continue_monotonically() {
    let mut applied = 0;
    for i in 0..60 {
        let g = case_grammar(21, i, &GenParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        for t in transform_trials(&mut rng, &g, 4, 3) {
            if t.applied() {
                applied += 1;
                assert!(t.continues(), "{}", t.config);
                assert!(t.monotone(), "{}: {:?} vs {:?}", t.config, t.before, t.after);
            }
        }
    }
    assert!(applied > 0);
}
