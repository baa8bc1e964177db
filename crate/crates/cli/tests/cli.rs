use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mingraph"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let path = out.with_extension("json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn zoo_lists_the_catalogue() {
    let o = Command::new(env!("CARGO_BIN_EXE_mingraph")).args(["zoo", "list"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for label in ["affine", "slag-exp", "lawson-osserman"] {
        assert!(text.contains(label), "{text}");
    }
}

#[test]
fn invariants_pass_and_catch_the_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["invariants"], None, &dir.path().join("clean"));
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("grassmann: 7/7 properties passed"), "{}", stdout(&ok));
    let junit = fs::read_to_string(dir.path().join("clean/junit.xml")).unwrap();
    assert!(junit.contains("<testsuite name=\"model_zoo\""));

    let bad = run(&["invariants", "--mutation", "slope-sign-flip"], None, &dir.path().join("mutant"));
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("FAIL grassmann::"));
}

#[test]
fn weakened_constraint_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"mu123":{"constraint":"pairwise-at-most-4"},"mu123_lambda":null,"sqrt2":null,"lambda_inequality":null,"app1":null}"#;
    let o = run(&["verify-algebra"], Some(cfg), &dir.path().join("weak"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("first at"));
}

#[test]
fn root_two_endpoint_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"mu123":null,"mu123_lambda":{"lambdas":[1.4142135623730951]},"sqrt2":null,"lambda_inequality":null,"app1":null}"#;
    let o = run(&["verify-algebra"], Some(cfg), &dir.path().join("endpoint"));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["solve"], None, &dir.path().join("slag"));
    assert_eq!(code(&ok), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("slag/solve-report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], true);
    assert!(report["error_vs_model"].as_f64().unwrap() < 1e-4);
    assert!(dir.path().join("slag/solution.bin").exists());

    let hard = run(&["solve"], Some(r#"{"max_iter":1}"#), &dir.path().join("hard"));
    assert_eq!(code(&hard), 2);

    let affine = r#"{"generator":{"model":{"affine":{"a":[[0.3,-0.2],[0.1,0.25]],"b":[0.1,-0.2]}}},"tol":1e-12}"#;
    let o = run(&["solve"], Some(affine), &dir.path().join("affine"));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn diagnose_reads_a_solved_patch() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["solve"], None, &dir.path().join("s"))), 0);
    let cfg = format!(
        r#"{{"patch":"{}","assert":{{"min_margin_delta1":-1e-6}}}}"#,
        dir.path().join("s/solution.json").display()
    );
    let o = run(&["diagnose"], Some(&cfg), &dir.path().join("d"));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("d/diagnose.csv")).unwrap();
    assert!(csv.starts_with("x0,x1,v,lip,dilation,B2,lhs,rhs,gap,margin_lambda,residual\n"));
    assert_eq!(csv.lines().count(), 1 + 29 * 29);
}

#[test]
fn diagnose_reports_the_first_failing_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model":"slag-exp","sampler":{"kind":"box","count":20,"lower":-1,"upper":1},"assert":{"v":9.0,"tol":1e-10}}"#;
    let o = run(&["diagnose"], Some(cfg), &dir.path().join("d"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row "));
}

#[test]
fn affine_measure_has_unit_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model":"affine","cubic_growth":null,"resolution":64,"density":{"constant_tol":0.005}}"#;
    let o = run(&["measure"], Some(cfg), &dir.path().join("m"));
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(dir.path().join("m/density.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("radius,volume,ratio,est_error"));
    for line in lines {
        let ratio: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 0.005, "{line}");
    }
}

#[test]
fn dilation_violation_is_an_assertion_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"cubic_growth":null,"density":null,"growth":{"lambda":1.0}}"#;
    let o = run(&["measure"], Some(cfg), &dir.path().join("g"));
    assert_eq!(code(&o), 1);
}

#[test]
fn invalid_input_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["diagnose"], Some(r#"{"model":"catenoid"}"#), &dir.path().join("a"));
    assert_eq!(code(&o), 3);
    let o = run(&["verify-algebra"], Some(r#"{"unknown_key":1}"#), &dir.path().join("b"));
    assert_eq!(code(&o), 3);
    let o = run(&["solve"], Some(r#"{"patch":"/nonexistent/patch.json"}"#), &dir.path().join("c"));
    assert_eq!(code(&o), 3);
}

#[test]
fn manifest_records_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"mu123":{"step":0.1},"mu123_lambda":null,"sqrt2":null,"lambda_inequality":null,"app1":null}"#;
    assert_eq!(code(&run(&["verify-algebra", "--seed", "7"], Some(cfg), &dir.path().join("m"))), 0);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "verify-algebra");
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["config"]["mu123"]["mu_max"], 4.0);
    assert_eq!(m["passed"], true);
    assert!(dir.path().join("m/run.log").exists());
}
