use std::process::{Command, Output};

use hypgrowth::report::{Document, Envelope};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypgrowth")).args(args).output().unwrap()
}

fn document(out: &Output) -> Document {
    let env = Envelope::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    env.validate().unwrap();
    env.document
}

#[test]
fn classify_reports_the_matrix() {
    let out = run(&["classify", "--group", "modular", "--word", "TTST"]);
    assert!(out.status.success());
    let Document::Classification(c) = document(&out) else { panic!() };
    assert_eq!(c.matrix.unwrap(), ["2", "1", "1", "1"].map(String::from));
    assert_eq!(c.fixed_points.len(), 2);
}

#[test]
fn csv_growth_table() {
    let out = run(&["growth", "--group", "free2", "--radius", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let counts: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["1", "5", "17", "53"]);
}

#[test]
fn deterministic_output_has_no_timestamp() {
    let a = run(&["--deterministic", "constants", "--group", "free2"]);
    let b = run(&["--deterministic", "constants", "--group", "free2"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!String::from_utf8_lossy(&a.stdout).contains("generated_unix"));
    let c = run(&["constants", "--group", "free2"]);
    assert!(String::from_utf8_lossy(&c.stdout).contains("generated_unix"));
}

#[test]
fn errors_are_documents_with_exit_codes() {
    let out = run(&["classify", "--group", "nonsense", "--word", "a"]);
    assert_eq!(out.status.code(), Some(2));
    let Document::Error(e) = document(&out) else { panic!() };
    assert_eq!(e.command, "classify");
    assert!(!out.stderr.is_empty());

    let out = run(&["certify", "--group", "finite-cyclic(6)"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(matches!(document(&out), Document::Error(_)));

    let out = run(&["horoballs", "--group", "free2", "--Q", "3", "--h0", "2"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn custom_matrices() {
    let out = run(&["find-hyperbolic", "--group", "custom", "--matrix", "1,2;0,1", "--matrix", "1,0;2,1"]);
    assert!(out.status.success());
    let Document::HyperbolicWitness(w) = document(&out) else { panic!() };
    assert_eq!(w.radius, 2);
}

#[test]
fn tree_lemma_run_is_clean() {
    let out = run(&["verify-lemmas", "--model", "tree", "--trials", "300", "--seed", "4"]);
    assert!(out.status.success());
    let Document::Lemmas(l) = document(&out) else { panic!() };
    assert_eq!(l.reports.len(), 6);
    assert!(l.reports.iter().all(|r| r.failed == 0));
    let out = run(&["verify-lemmas", "--model", "tree", "--delta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
