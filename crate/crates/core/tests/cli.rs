use std::path::{Path, PathBuf};

use regcoreset::cli::dispatch;
use serde_json::{json, Value};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("regcoreset").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

#[test]
fn solve_one_dimensional_ridge() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        &json!({ "design": { "rows": 1, "cols": 1, "data": [1.0] }, "response": [2.0] }),
    );
    let doc = run_json(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--family",
        "ridge",
        "--lambda",
        "1",
    ]);
    let x = doc["result"]["solution"][0].as_f64().unwrap();
    assert!((x - 1.0).abs() < 1e-12);
    assert_eq!(doc["config"]["lambda"], json!(1.0));
    assert_eq!(doc["master_seed"], json!(0));
}

#[test]
fn identity_coreset_verifies_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("ng.json");
    let core = dir.path().join("core.json");
    let code = run(&[
        "gen-ng",
        "--n",
        "200",
        "--d",
        "4",
        "--alpha",
        "0.05",
        "--seed",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ])
    .0;
    assert_eq!(code, 0);
    let code = run(&[
        "coreset",
        "--instance",
        inst.to_str().unwrap(),
        "--scheme",
        "identity",
        "--lambda",
        "0.5",
        "--out",
        core.to_str().unwrap(),
    ])
    .0;
    assert_eq!(code, 0);
    let doc = run_json(&[
        "verify",
        "--instance",
        inst.to_str().unwrap(),
        "--coreset",
        core.to_str().unwrap(),
        "--lambda",
        "0.5",
        "--queries",
        "50",
    ]);
    assert_eq!(doc["report"]["passed"], json!(true));
    assert_eq!(doc["report"]["max_relative_deviation"], json!(0.0));
}

#[test]
fn sampled_coreset_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("ng.json");
    let core = dir.path().join("core.json");
    run(&[
        "gen-ng",
        "--n",
        "500",
        "--d",
        "4",
        "--alpha",
        "0.05",
        "--seed",
        "1",
        "--out",
        inst.to_str().unwrap(),
    ]);
    let code = run(&[
        "coreset",
        "--instance",
        inst.to_str().unwrap(),
        "--scheme",
        "ridge-leverage",
        "--lambda",
        "0.5",
        "--size",
        "60",
        "--out",
        core.to_str().unwrap(),
    ])
    .0;
    assert_eq!(code, 0);
    let doc = run_json(&[
        "solve",
        "--coreset",
        core.to_str().unwrap(),
        "--family",
        "modified_lasso",
        "--lambda",
        "0.5",
    ]);
    assert_eq!(doc["result"]["converged"], json!(true));
    assert_eq!(doc["result"]["solution"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &json!({
            "n": 600, "d": 4, "lambda_grid": [0.5], "sample_sizes": [40, 80],
            "schemes": ["ridge-leverage", "uniform"], "trials_per_cell": 3, "master_seed": 9
        }),
    );
    let first = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    let second = run(&[
        "--threads",
        "3",
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(first.0, 0, "{}", first.2);
    assert_eq!(first.1, second.1);
    let doc: Value = serde_json::from_str(&first.1).unwrap();
    assert_eq!(doc["config"]["master_seed"], json!(9));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &json!({ "n": 300, "d": 4, "lambda_grid": [0.0, 1.0], "master_seed": 2 }),
    );
    let (code, out, err) = run(&[
        "sparsity",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "250",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("label,"));
    let doc = run_json(&["sparsity", "--config", cfg.to_str().unwrap(), "--n", "250"]);
    assert_eq!(doc["config"]["n"], json!(250));
}

#[test]
fn lowerbound_default_instance() {
    let doc = run_json(&[
        "lowerbound",
        "--spec",
        r#"{"p":2,"q":1,"r":2,"s":1,"lambda":1,"family":"lasso"}"#,
    ]);
    assert_eq!(doc["leaves_band"], json!(true));
    let (code, _, err) = run(&[
        "lowerbound",
        "--spec",
        r#"{"p":2,"q":2,"r":2,"s":2,"lambda":1,"family":"ridge"}"#,
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("theorem inapplicable"));
}

#[test]
fn invalid_numbers_exit_one_before_reading_data() {
    for args in [
        [
            "solve",
            "--instance",
            "/nonexistent.json",
            "--family",
            "ridge",
            "--lambda",
            "-1",
        ]
        .as_slice(),
        [
            "verify",
            "--instance",
            "/nonexistent.json",
            "--coreset",
            "/nonexistent.json",
            "--epsilon",
            "1.5",
        ]
        .as_slice(),
        [
            "verify",
            "--instance",
            "/nonexistent.json",
            "--coreset",
            "/nonexistent.json",
            "--epsilon",
            "0",
        ]
        .as_slice(),
        [
            "coreset",
            "--instance",
            "/nonexistent.json",
            "--scheme",
            "uniform",
            "--epsilon",
            "2",
        ]
        .as_slice(),
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 1, "{args:?}");
        assert!(err.contains("invalid parameter"), "{args:?}: {err}");
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["solve", "--bogus"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn missing_file_is_reported() {
    let (code, _, err) = run(&[
        "solve",
        "--instance",
        "/nonexistent.json",
        "--family",
        "ridge",
    ]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}
