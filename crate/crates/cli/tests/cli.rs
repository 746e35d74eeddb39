use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tracecone"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, value: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, value).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn entropy_problem() -> Value {
    json!({
        "family": {"kind": "negentropy", "p": null},
        "d": 2,
        "c": [1, 0, 0, 0, 0],
        "A": [[0, 1, 0, 0, 0], [0, 0, 1, 0, 1]],
        "b": [1, 1],
        "x0": {"u": 1, "v": 1, "W_packed": [0.7, 0.1, 0.3]}
    })
}

#[test]
fn eval_unit_point() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"family": "neglog", "u": 1, "v": 1, "W_packed": [1]}"#);
    let out = run(&["eval", "--input", arg(&p)]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["interior"], true);
    assert_eq!(r["zeta"].as_f64().unwrap(), 1.0);
    assert!(r["gamma"].as_f64().unwrap().abs() < 1e-15);
    assert!(r["euler_residual"].as_f64().unwrap() <= 1e-10);
    assert!((r["barrier_parameter"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(r["gradient"].as_array().unwrap().len(), 3);
}

#[test]
fn eval_family_flag_overrides_file() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"u": 2, "v": 1, "W_packed": [1, 0, 1]}"#);
    let out = run(&["eval", "--input", arg(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = run(&["eval", "--input", arg(&p), "--family", "negentropy"]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["family"]["kind"], "negentropy");
    assert_eq!(r["d"], 2);
    // tr(I log I) = 0
    assert!((r["zeta"].as_f64().unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn eval_boundary_is_data() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "b.json", r#"{"family": {"kind": "neglog", "p": null}, "u": 0, "v": 1, "W_packed": [1]}"#);
    let out = run(&["eval", "--input", arg(&p)]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["interior"], false);
    assert!(r["reason"].as_str().unwrap().contains("ζ"));
    assert!(r["gamma"].is_null());

    let p = write(&dir, "s.json", r#"{"family": "neglog", "u": 1, "v": 1, "W_packed": [1, 0, -1]}"#);
    let r = stdout_json(&run(&["eval", "--input", arg(&p)]));
    assert_eq!(r["interior"], false);
    assert!(r["zeta"].is_null());
}

#[test]
fn malformed_input_reports_position() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "m.json", "{\"family\": \"neglog\",\n \"u\": 1, \"v\": }");
    let out = run(&["eval", "--input", arg(&p)]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "parse");
    assert_eq!(e["line"], 2);

    let p = write(&dir, "f.json", r#"{"family": "neglog", "u": 1, "W_packed": [1]}"#);
    let e = stderr_json(&run(&["eval", "--input", arg(&p)]));
    assert!(e["message"].as_str().unwrap().contains("`v`"));

    let out = run(&["eval", "--input", arg(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["eval"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--family", "power:3"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--trials", "2", "--tol=-1"]).status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn verify_small_run_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let out = run(&[
            "verify", "--trials", "15", "--dim", "1", "--dim", "3", "--family", "neglog", "--family", "power:0.5",
            "--seed", "7", "--output", arg(p),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let a = fs::read(&paths[0]).unwrap();
    assert_eq!(a, fs::read(&paths[1]).unwrap());
    let r: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["configurations"].as_array().unwrap().len(), 4);
    assert!(r["controls"].as_array().unwrap().is_empty());
}

#[test]
fn verify_negative_control_is_flagged_not_failed() {
    let out = run(&["verify", "--trials", "10", "--dim", "2", "--family", "negentropy", "--negative-control"]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    let control = &r["controls"][0];
    assert_eq!(control["family"]["p"], 3.0);
    assert_eq!(control["flagged"], true);
    assert!(control["violations"].as_u64().unwrap() > 0);
    assert!(!control["witness"].is_null());
}

#[test]
fn verify_reads_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"families": ["power:1.5"], "sides": [2], "trials": 5, "seed": 3}"#);
    let out = run(&["verify", "--input", arg(&cfg), "--seed", "4"]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert_eq!(r["seed"], 4);
    assert_eq!(r["configurations"][0]["trials"], 5);
    assert_eq!(r["configurations"][0]["family"]["p"], 1.5);

    let cfg = write(&dir, "bad.json", r#"{"trails": 5}"#);
    let out = run(&["verify", "--input", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("trails"));
}

#[test]
fn verify_failing_check_exits_1() {
    // rounding alone exceeds a 1e-30 homogeneity tolerance
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"families": ["neglog"], "sides": [3], "trials": 5, "tolerances": {"homogeneity": 1e-30}}"#);
    let out = run(&["verify", "--input", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert_eq!(r["passed"], false);
    let checks = r["configurations"][0]["checks"].as_array().unwrap();
    let homog = checks.iter().find(|c| c["check"] == "log_homogeneity").unwrap();
    assert!(homog["passes"].as_u64().unwrap() < homog["trials"].as_u64().unwrap());
    assert!(!homog["witness"].is_null());
}

#[test]
fn solve_entropy_problem() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "e.json", &entropy_problem().to_string());
    let out_path = dir.path().join("out.json");
    let out = run(&["solve", "--input", arg(&p), "--output", arg(&out_path), "--pretty"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("\n  \"status\""));
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["status"], "optimal");
    assert!((r["objective"].as_f64().unwrap() + 2f64.ln()).abs() <= 1e-6);
    let x: Vec<f64> = r["x"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((x[2] - 0.5).abs() < 1e-5 && x[3].abs() < 1e-5 && (x[4] - 0.5).abs() < 1e-5);
}

#[test]
fn solve_pinning_problem() {
    // v = 1, W = I pinned; optimum u = φ(I) = 0 for neglog
    let problem = json!({
        "family": "neglog",
        "d": 2,
        "c": [1, 0, 0, 0, 0],
        "A": [[0, 1, 0, 0, 0], [0, 0, 1, 0, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]],
        "b": [1, 1, 0, 1],
        "x0": {"u": 1, "v": 1, "W_packed": [1, 0, 1]}
    });
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pin.json", &problem.to_string());
    let out = run(&["solve", "--input", arg(&p)]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    assert!(r["objective"].as_f64().unwrap().abs() <= 1e-6);
}

#[test]
fn solve_iteration_limit_exits_1() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "e.json", &entropy_problem().to_string());
    let out = run(&["solve", "--input", arg(&p), "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert_eq!(r["status"], "iteration_limit");
    assert_eq!(r["iterations"], 1);
}

#[test]
fn solve_rejects_bad_problems() {
    let dir = TempDir::new().unwrap();
    let mut infeasible = entropy_problem();
    infeasible["b"] = json!([1, 2]);
    let mut deficient = entropy_problem();
    deficient["A"] = json!([[0, 1, 0, 0, 0], [0, 2, 0, 0, 0]]);
    let mut short = entropy_problem();
    short["c"] = json!([1, 0]);
    for (name, problem) in [("infeasible", infeasible), ("deficient", deficient), ("short", short)] {
        let p = write(&dir, "bad.json", &problem.to_string());
        let out = run(&["solve", "--input", arg(&p)]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        stderr_json(&out);
    }
    let p = write(&dir, "e.json", &entropy_problem().to_string());
    assert_eq!(run(&["solve", "--input", arg(&p), "--gap-tol", "0"]).status.code(), Some(2));
}

#[test]
fn verify_default_run_passes() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["verify", "--output", arg(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    // 4 families × sides 1..=6
    assert_eq!(r["configurations"].as_array().unwrap().len(), 24);
}
