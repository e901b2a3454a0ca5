use std::path::PathBuf;
use std::process::{Command, Output};

fn fx(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn tlr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn parse_accepts_example() {
    let o = tlr(&["parse", "-g", &fx("g_ex.tlr"), "-t", &fx("g_ex.tok")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "accepted\n");
}

#[test]
fn parse_rejects_naive_cycle() {
    let script = [fx("delta0.tf"), fx("delta1.tf"), fx("delta2.tf")].join(",");
    let o = tlr(&["parse", "-g", &fx("g_naive.tlr"), "-t", &fx("d.tok"), "--delta-script", &script, "--trace"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[..3], ["SHIFT d", "REDUCE D -> d", "REDUCE B -> D"]);
    assert!(lines[3].starts_with("TRANSFORM rejected"));
    assert!(lines[4].starts_with("REJECT invalid-transformation"));
    assert!(lines[5].starts_with("rejected: "));
}

#[test]
fn parse_per_line() {
    let dir = std::env::temp_dir().join(format!("tlr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let toks = dir.join("lines.tok");
    std::fs::write(&toks, "c\n\nd\nc d\n").unwrap();
    let o = tlr(&["parse", "-g", &fx("g_naive.tlr"), "-t", toks.to_str().unwrap(), "--per-line"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[..2], ["1\taccepted", "2\taccepted"]);
    assert!(lines[2].starts_with("3\trejected: syntax-error"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn check_delta_reports_each_production() {
    let o = tlr(&["check-delta", "-g", &fx("g_naive.tlr"), "-t", &fx("d.tok"), "-d", &fx("delta0.tf")]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.starts_with("# configuration: B . $end\n"));
    assert!(out.contains("S -> B\t2\tviolated\n"));
    assert!(out.contains("$accept -> S\t2\tok\n"));
    assert!(out.ends_with("invalid: S -> B not conserved\n"));

    let o = tlr(&["check-delta", "-g", &fx("g_naive.tlr"), "-t", &fx("d.tok"), "-d", &fx("identity.tf")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("valid\n"));
}

#[test]
fn check_delta_without_transformative_reduction() {
    let o = tlr(&["check-delta", "-g", &fx("g_naive.tlr"), "-t", &fx("cd.tok"), "-d", &fx("identity.tf")]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn oracle_prints_trees_and_map() {
    let o = tlr(&["oracle", "-g", &fx("g_naive.tlr"), "--prefix", "B", "--lookahead", "$end"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("# proper trees: 1, max height: 3\n"));
    assert!(out.contains("$accept -> S $end\n  S -> B\n    B\n  $end\n"));
    assert!(out.contains("S -> B\t2\n"));

    let o = tlr(&[
        "oracle",
        "-g",
        &fx("g_ex.tlr"),
        "--prefix",
        "Q G j Q G j Q G j c c c c B",
        "--lookahead",
        "k",
        "--max-trees",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("# proper trees: 6859,"));
    assert!(stdout(&o).contains("G -> G j H\t3\n"));
}

#[test]
fn tables_and_conflicts() {
    let o = tlr(&["tables", "-g", &fx("g_naive.tlr")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
    let o = tlr(&["tables", "-g", &fx("ambiguous.tlr")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reduce A -> a vs reduce B -> a"));
}

#[test]
fn usage_errors() {
    assert_eq!(tlr(&["parse", "-g", "/nonexistent.tlr", "-t", &fx("d.tok")]).status.code(), Some(1));
    assert_eq!(tlr(&["bogus"]).status.code(), Some(1));
    assert_eq!(tlr(&["--help"]).status.code(), Some(0));
}

#[test]
fn difftest_exit_codes() {
    let o = tlr(&["difftest", "--seed", "1", "--cases", "20", "--max-shifts", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(" 0 mismatches"));
    let o = tlr(&["difftest", "--seed", "1", "--cases", "20", "--max-shifts", "4", "--mutant"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("# minimized counterexample"));
}
