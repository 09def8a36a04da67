//! End-to-end tests of the `setopt` binary: exit codes, report shape,
//! and byte-level determinism.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn setopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn shipped_demo() -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems/demo.json")
        .canonicalize()
        .expect("shipped demo problem exists");
    path.to_string_lossy().into_owned()
}

fn write_problem(json: &str) -> tempfile::NamedTempFile {
    let mut file = tempfile::Builder::new()
        .suffix(".json")
        .tempfile()
        .expect("temp file");
    file.write_all(json.as_bytes()).expect("write problem");
    file
}

const SINGLETON_IDENTITY: &str = r#"{
  "n": 1, "m": 2, "cone": "orthant", "dim": 2,
  "components": [["x1", "x1"]],
  "omega": {"type": "free"}, "xbar": [0]
}"#;

#[test]
fn validate_shipped_example_exits_zero() {
    let out = setopt(&["validate", "--problem", &shipped_demo()]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["valid"], Value::Bool(true));
    assert_eq!(v["report"]["components"], 2);
    assert!(v["problem_hash"].as_str().unwrap().len() == 64);
    assert_eq!(v["tolerances"]["stat"], 1e-7);
}

#[test]
fn demo_asserts_all_golden_values() {
    let out = setopt(&["demo"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let report = &v["report"];
    assert_eq!(report["all_passed"], Value::Bool(true));
    assert_eq!(report["lower_stationary"], Value::Bool(true));
    assert_eq!(report["upper_stationary"], Value::Bool(true));
    assert_eq!(report["vector_stationary"], Value::Bool(false));
    assert_eq!(report["grid_lower_minimal"], Value::Bool(true));
    assert_eq!(report["grid_upper_minimal"], Value::Bool(true));
    assert_eq!(report["grid_vector_weak_minimal"], Value::Bool(false));
    assert!(report["vector_weak_counterexample"]["x"].is_array());
}

#[test]
fn stationarity_rejection_exits_three() {
    let file = write_problem(SINGLETON_IDENTITY);
    let out = setopt(&[
        "stationarity",
        "--problem",
        file.path().to_str().unwrap(),
        "--relation",
        "lower",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["stationary"], Value::Bool(false));
    assert!((v["report"]["residual"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
}

#[test]
fn stationarity_acceptance_exits_zero() {
    let out = setopt(&[
        "stationarity",
        "--problem",
        &shipped_demo(),
        "--relation",
        "lower",
        "--dump-polytopes",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["stationary"], Value::Bool(true));
    assert!(v["report"]["polytopes"].as_array().unwrap().len() == 2);
}

#[test]
fn invalid_problem_exits_two_with_diagnostics() {
    let file = write_problem(
        r#"{"n": 1, "m": 2, "cone": "orthant", "dim": 2,
        "components": [["x1", "x1"]], "omega": {"type": "free"},
        "xbar": [0], "surprise": true}"#,
    );
    let out = setopt(&["validate", "--problem", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert!(v["error"].as_str().unwrap().contains("surprise"));
}

#[test]
fn syntax_error_exits_two() {
    let file = write_problem(
        r#"{"n": 1, "m": 2, "cone": "orthant", "dim": 2,
        "components": [["x1 +", "x1"]], "omega": {"type": "free"}, "xbar": [0]}"#,
    );
    let out = setopt(&["eval", "--problem", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_json(&out)["error"].is_string());
}

#[test]
fn identical_inputs_produce_byte_identical_reports() {
    let demo = shipped_demo();
    for subcommand in [
        vec!["relate", "--problem", &demo, "--at", "0.25"],
        vec!["stationarity", "--problem", &demo],
        vec!["minimals", "--problem", &demo, "--kind", "wmax"],
        vec!["descend", "--problem", &demo, "--x0", "0.5", "--seed", "42"],
    ] {
        let first = setopt(&subcommand);
        let second = setopt(&subcommand);
        assert_eq!(first.status.code(), second.status.code());
        assert_eq!(
            first.stdout, second.stdout,
            "reports diverged for {subcommand:?}"
        );
    }
}

#[test]
fn tolerance_override_is_embedded_in_the_report() {
    let tols = write_problem(r#"{"stat": 0.001}"#);
    let out = setopt(&[
        "stationarity",
        "--problem",
        &shipped_demo(),
        "--tolerances",
        tols.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["tolerances"]["stat"], 0.001);
    assert_eq!(v["tolerances"]["eq"], 1e-9);
}

#[test]
fn descend_writes_a_csv_trace() {
    let dir = tempfile::tempdir().expect("temp dir");
    let csv_path = dir.path().join("trace.csv");
    let file = write_problem(
        r#"{"n": 1, "m": 2, "cone": "orthant", "dim": 2,
        "components": [["x1", "x1"]],
        "omega": {"type": "box", "lower": [0], "upper": [1]}, "xbar": [1]}"#,
    );
    let out = setopt(&[
        "descend",
        "--problem",
        file.path().to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let final_x = v["report"]["final_x"][0].as_f64().unwrap();
    assert!(final_x.abs() <= 1e-6);
    let csv = std::fs::read_to_string(&csv_path).expect("csv written");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,x,step,merit,residual,accepted"));
    assert!(lines.count() >= 1);
}

#[test]
fn oracle_invariance_requires_a_cone_direction() {
    let out = setopt(&[
        "oracle",
        "--problem",
        &shipped_demo(),
        "--check",
        "invariance",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = setopt(&[
        "oracle",
        "--problem",
        &shipped_demo(),
        "--check",
        "invariance",
        "--k",
        "0.5,0.5",
        "--probes",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["holds"], Value::Bool(true));
}
