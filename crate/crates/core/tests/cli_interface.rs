//! Black-box tests of the command-line front end: exit-code contract,
//! report formats, determinism, file-backed inputs, and flag handling.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxregkit"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn write_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("temp dir is writable");
    path
}

fn scalar_commutator_config() -> &'static str {
    r#"{
        "experiments": ["commutator"],
        "generator": {"preset": "scalar", "re": 1.0},
        "signal": {"preset": "gauss_bump"},
        "grid": {"T": 20.0, "N": 512},
        "paths": "both"
    }"#
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("stdout is a JSON report")
}

#[test]
fn scalar_commutator_run_passes_with_a_json_report() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(dir.path(), "run.json", scalar_commutator_config());
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    let report = stdout_json(&output);
    assert_eq!(report["all_pass"], Value::Bool(true));
    let rows = report["rows"].as_array().expect("rows array");
    assert!(!rows.is_empty());
    for row in rows {
        assert_eq!(row["experiment"], "commutator");
        assert_eq!(row["pass"], Value::Bool(true));
        assert!(row["value"].as_f64().expect("numeric value") <= 1e-3);
        for field in ["operator", "path", "N", "T", "n", "alpha", "tail_bound", "wall_time_s"] {
            assert!(!row[field].is_null(), "row is missing {field}");
        }
    }
    assert!(rows.iter().any(|r| r["path"] == "direct"));
    assert!(rows.iter().any(|r| r["path"] == "fourier"));
}

#[test]
fn jordan_norm_gap_reports_a_tolerance_failure() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{
            "experiments": ["norm_equality"],
            "generator": {"preset": "jordan_like", "n": 2, "coupling": 10.0},
            "signal": {"preset": "gauss_bump", "params": {"center": 2.0, "width": 0.5, "direction": 1}},
            "grid": {"T": 20.0, "N": 1024}
        }"#,
    );
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(1));

    let report = stdout_json(&output);
    assert_eq!(report["all_pass"], Value::Bool(false));
    let rows = report["rows"].as_array().expect("rows array");
    assert!(rows.iter().any(|r| r["pass"] == Value::Bool(false)));
}

#[test]
fn unknown_config_field_is_rejected_before_running() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{"experiments": [], "generator": {"preset": "scalar"}, "bogus": 1}"#,
    );
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus"), "diagnostic names the field: {stderr}");
}

#[test]
fn unstable_generator_is_a_numerical_error() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{
            "experiments": ["commutator"],
            "generator": {"preset": "scalar", "re": -1.0},
            "grid": {"T": 20.0, "N": 512}
        }"#,
    );
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn csv_format_uses_the_documented_header() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(dir.path(), "run.json", scalar_commutator_config());
    let output = run_cli(&[
        "run",
        "--config",
        config.to_str().expect("utf-8 path"),
        "--format",
        "csv",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).expect("csv is utf-8");
    let header = text.lines().next().expect("nonempty csv");
    assert_eq!(
        header,
        "experiment,operator,path,N,T,n,alpha,value,tail_bound,wall_time_s,pass"
    );
    assert!(text.lines().count() > 1);
}

/// Scrubs the fields that legitimately vary between identical runs.
fn scrub_timing(report: &mut Value) {
    report["timestamp_unix"] = Value::Null;
    if let Some(rows) = report["rows"].as_array_mut() {
        for row in rows {
            row["wall_time_s"] = Value::Null;
        }
    }
}

#[test]
fn identical_configs_and_seeds_reproduce_the_report() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{
            "experiments": ["commutator", "desimon"],
            "generator": {"preset": "random_sectorial", "n": 4},
            "signal": {"preset": "randsmooth"},
            "grid": {"T": 10.0, "N": 256},
            "paths": "direct"
        }"#,
    );
    let args = ["run", "--config", config.to_str().expect("utf-8 path"), "--seed", "7"];
    let mut first = stdout_json(&run_cli(&args));
    let mut second = stdout_json(&run_cli(&args));
    scrub_timing(&mut first);
    scrub_timing(&mut second);
    assert_eq!(first, second);
}

#[test]
fn seed_override_reaches_the_experiments() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{
            "experiments": ["commutator"],
            "generator": {"preset": "random_sectorial", "n": 2},
            "signal": {"preset": "randsmooth"},
            "grid": {"T": 10.0, "N": 256},
            "paths": "direct"
        }"#,
    );
    let path = config.to_str().expect("utf-8 path");
    let first = stdout_json(&run_cli(&["run", "--config", path, "--seed", "1"]));
    let second = stdout_json(&run_cli(&["run", "--config", path, "--seed", "2"]));
    assert_eq!(first["config"]["seed"], Value::from(1));
    assert_eq!(second["config"]["seed"], Value::from(2));
    let value = |r: &Value| r["rows"][0]["value"].as_f64().expect("numeric value");
    assert_ne!(value(&first), value(&second), "seed must reshape the drawn inputs");
}

#[test]
fn file_backed_generator_and_signal_are_loaded() {
    let dir = TempDir::new().expect("temp dir");
    let matrix = write_file(
        dir.path(),
        "gen.json",
        r#"{"n": 2, "re": [[2.0, 0.3], [0.1, 1.0]], "im": [[0.0, 0.1], [-0.1, 0.0]]}"#,
    );

    let n_samples = 256;
    let horizon = 10.0;
    let mut re = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        let t = horizon * j as f64 / n_samples as f64;
        let bump = (-(t - 2.5f64).powi(2) / 0.5).exp();
        re.push(vec![bump, 0.5 * bump]);
    }
    let signal_body = serde_json::json!({
        "T": horizon,
        "N": n_samples,
        "dim": 2,
        "re": re,
        "im": vec![vec![0.0, 0.0]; n_samples],
    });
    let signal = write_file(dir.path(), "sig.json", &signal_body.to_string());

    let config_body = serde_json::json!({
        "experiments": ["commutator", "residuals"],
        "generator": {"file": matrix},
        "signal": {"file": signal},
        "grid": {"T": horizon, "N": n_samples},
        "paths": "direct"
    });
    let config = write_file(dir.path(), "run.json", &config_body.to_string());
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["all_pass"], Value::Bool(true));
}

#[test]
fn sweep_emits_per_resolution_rows_and_an_order_fit() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "sweep.json",
        r#"{
            "experiments": ["commutator"],
            "generator": {"preset": "scalar", "re": 1.0},
            "signal": {"preset": "exp_decay"},
            "grid": {"T": 20.0, "N": 1024},
            "paths": "direct"
        }"#,
    );
    let output = run_cli(&[
        "sweep",
        "--config",
        config.to_str().expect("utf-8 path"),
        "--n-list",
        "256,512,1024",
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    let rows = report["rows"].as_array().expect("rows array");
    let per_n: Vec<_> = rows.iter().filter(|r| r["path"] == "direct").collect();
    assert_eq!(per_n.len(), 3, "one row per requested resolution");
    let order_row = rows
        .iter()
        .find(|r| r["path"] == "order-fit")
        .expect("sweep appends a fitted-order row");
    assert_eq!(order_row["pass"], Value::Bool(true));
    assert!(order_row["value"].as_f64().expect("numeric order") >= 1.5);
}

#[test]
fn empty_experiment_list_yields_an_empty_passing_report() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "run.json",
        r#"{"experiments": [], "generator": {"preset": "scalar"}}"#,
    );
    let output = run_cli(&["run", "--config", config.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    assert_eq!(report["all_pass"], Value::Bool(true));
    assert_eq!(report["rows"].as_array().expect("rows array").len(), 0);
}

#[test]
fn quiet_run_with_out_path_writes_the_file_and_prints_nothing() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(dir.path(), "run.json", scalar_commutator_config());
    let out = dir.path().join("report.json");
    let output = run_cli(&[
        "run",
        "--config",
        config.to_str().expect("utf-8 path"),
        "--out",
        out.to_str().expect("utf-8 path"),
        "--quiet",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty(), "quiet mode must not print");
    let body = std::fs::read_to_string(&out).expect("report file written");
    let report: Value = serde_json::from_str(&body).expect("file holds a JSON report");
    assert_eq!(report["all_pass"], Value::Bool(true));
}

#[test]
fn bench_rows_carry_agreement_and_a_trend_verdict() {
    let dir = TempDir::new().expect("temp dir");
    let config = write_file(
        dir.path(),
        "bench.json",
        r#"{
            "experiments": [],
            "generator": {"preset": "random_sectorial", "n": 2},
            "signal": {"preset": "randsmooth"},
            "grid": {"T": 10.0, "N": 256}
        }"#,
    );
    let output = run_cli(&[
        "bench",
        "--config",
        config.to_str().expect("utf-8 path"),
        "--n-list",
        "128,256,512",
        "--dims",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    let rows = report["rows"].as_array().expect("rows array");
    assert!(rows.iter().any(|r| r["operator"] == "ratio-trend"));
    assert!(rows.iter().filter(|r| r["operator"] == "forward").count() >= 6);
}
