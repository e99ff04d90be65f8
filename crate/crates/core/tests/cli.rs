//! End-to-end tests of the installed binary: output routing, determinism,
//! and the exit-code contract.

use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ancolab"));
    cmd.env_remove("ANCOLAB_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn analyze_json_is_deterministic_per_seed() {
    let args = [
        "analyze",
        "--preset",
        "pkl:1:2",
        "--t-grid",
        "geom:1:0.5:4",
        "--samples",
        "2",
        "--seed",
        "11",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr_str(&first));
    assert_eq!(first.stdout, second.stdout);

    let mut other_args = args;
    other_args[8] = "12";
    let other = run(&other_args);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(first.stdout, other.stdout);

    let parsed: serde_json::Value = serde_json::from_slice(&first.stdout).expect("json report");
    assert_eq!(parsed["config"]["seed"], 11);
    assert_eq!(parsed["sweep"]["rows"].as_array().map(Vec::len), Some(4));
    assert_eq!(parsed["sweep"]["criterion"]["holds"], true);
}

#[test]
fn analyze_csv_has_frozen_header() {
    let out = run(&[
        "analyze",
        "--preset",
        "flat",
        "--t-grid",
        "geom:1:0.5:3",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "t,lambda_min,diam_bound,anco_quantity,criterion_verdict"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with("true")));
}

#[test]
fn out_flag_and_out_dir_env_route_files() {
    let dir = tempfile::tempdir().expect("tempdir");
    let target = dir.path().join("sweep.json");
    let out = run(&[
        "analyze",
        "--preset",
        "flat",
        "--t-grid",
        "list:1,0.5",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).expect("report written");
    assert!(written.contains("\"calibrated_sign\""));

    let envdir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["analyze", "--preset", "flat", "--t-grid", "list:1,0.5"])
        .env("ANCOLAB_OUT_DIR", envdir.path())
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    assert!(envdir.path().join("analyze.json").is_file());

    let explicit = std::fs::read_to_string(envdir.path().join("analyze.json")).unwrap();
    assert_eq!(written, explicit);
}

#[test]
fn config_file_drives_analyze() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("experiment.json");
    std::fs::write(
        &path,
        r#"{
            "base": "flat:2",
            "algebra": "abelian:1",
            "potential": "zero",
            "t_grid": "geom:1:0.5:3",
            "samples": 2
        }"#,
    )
    .unwrap();
    let out = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    assert_eq!(parsed["config"]["base"], "flat:2");
    assert_eq!(parsed["sweep"]["criterion"]["holds"], true);

    let bad = run(&["analyze", "--config", "/nonexistent/experiment.json"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(stderr_str(&bad).contains("input error"));
}

#[test]
fn bad_input_exits_with_three() {
    let unknown = run(&["analyze", "--preset", "nosuch"]);
    assert_eq!(unknown.status.code(), Some(3));
    assert!(stderr_str(&unknown).contains("input error"));

    let missing = run(&["analyze"]);
    assert_eq!(missing.status.code(), Some(3));

    let conflicting = run(&["analyze", "--preset", "flat", "--config", "x.json"]);
    assert_eq!(conflicting.status.code(), Some(3));

    let bad_grid = run(&["analyze", "--preset", "flat", "--t-grid", "geom:0:1:3"]);
    assert_eq!(bad_grid.status.code(), Some(3));
}

#[test]
fn verify_passes_on_hopf() {
    let out = run(&["verify", "--preset", "hopf", "--points", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    assert_eq!(parsed["pass"], true);
    assert_eq!(parsed["calibrated_sign"], -1.0);
    assert_eq!(parsed["consistency"][0]["pass"], true);
}

#[test]
fn injected_sign_error_exits_with_two() {
    let out = run(&[
        "verify",
        "--preset",
        "su2-demo",
        "--points",
        "1",
        "--inject-sign-error",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).expect("report emitted");
    assert_eq!(parsed["pass"], false);
    assert!(stderr_str(&out).contains("verification failure"));
}

#[test]
fn topology_preset_matches_explicit_flags() {
    let preset = run(&["topology", "--preset", "pkl:1:2"]);
    let explicit = run(&["topology", "--base", "cp:1,cp:2", "--euler", "1,2"]);
    assert_eq!(preset.status.code(), Some(0), "{}", stderr_str(&preset));
    assert_eq!(preset.stdout, explicit.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&preset.stdout).expect("json report");
    assert_eq!(parsed["cohomology"]["groups"][4]["display"], "Z/4");
    assert_eq!(parsed["betti_bounds"]["pass"], true);

    let negative = run(&["topology", "--base", "cp:1,cp:2", "--euler", "0,-3"]);
    assert_eq!(negative.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_slice(&negative.stdout).unwrap();
    assert_eq!(parsed["cohomology"]["fundamental_group"]["display"], "Z/3");

    let no_source = run(&["topology"]);
    assert_eq!(no_source.status.code(), Some(3));

    let not_a_circle = run(&["topology", "--preset", "su2-demo"]);
    assert_eq!(not_a_circle.status.code(), Some(3));

    let bad_factor = run(&["topology", "--base", "sphere:2", "--euler", "1"]);
    assert_eq!(bad_factor.status.code(), Some(3));
}

#[test]
fn topology_sweep_csv_rows() {
    let out = run(&["topology-sweep", "--k", "1", "--l-range", "1..3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    assert_eq!(
        stdout_str(&out),
        "l,H4_torsion_order,distinct_class_id\n1,1,0\n2,4,1\n3,9,2\n"
    );

    let json = run(&[
        "topology-sweep",
        "--k",
        "1",
        "--l-range",
        "1..3",
        "--format",
        "json",
    ]);
    let parsed: serde_json::Value = serde_json::from_slice(&json.stdout).expect("json report");
    assert_eq!(parsed["rows"].as_array().map(Vec::len), Some(3));

    let empty = run(&["topology-sweep", "--l-range", "5..4"]);
    assert_eq!(empty.status.code(), Some(3));

    let default_range = run(&["topology-sweep"]);
    assert_eq!(default_range.status.code(), Some(0));
    assert_eq!(stdout_str(&default_range).lines().count(), 51);
}

#[test]
fn demo_tours_the_presets() {
    let out = run(&["demo"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_str(&out));
    let text = stdout_str(&out);
    assert!(text.contains("su2-demo"));
    assert!(text.contains("fails"));
    assert!(text.contains("pass"));
    assert!(text.contains("H^4 = Z/4"));
}
