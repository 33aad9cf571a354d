//! CLI behavior: console output, file outputs, and exit codes
//! (0 success, 2 validation, 3 path budget exceeded, 4 IO).

use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

fn riskpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskpath"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn gen_graph(dir: &TempDir, args: &[&str]) -> PathBuf {
    let path = dir.path().join("graph.json");
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.push("--out");
    full.push(path.to_str().unwrap());
    let out = riskpath(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn gen_prints_counts_and_writes_valid_json() {
    let dir = TempDir::new().unwrap();
    let path = gen_graph(&dir, &["diamond-sequence", "--k", "4"]);
    let text = std::fs::read_to_string(&path).unwrap();
    let spec: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(spec["vertices"].as_array().unwrap().len(), 13);

    let out = riskpath(&["gen", "chain", "--m", "1", "--out", path.to_str().unwrap()]);
    assert!(stdout(&out).contains("2 vertices, 1 edges, 1 paths"));
}

#[test]
fn gen_rejects_bad_parameters() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.json");
    let out = riskpath(&["gen", "diamond-sequence", "--k", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    let out = riskpath(&["gen", "preset", "--name", "nope", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_bucketed_reports_estimate_path_and_budget() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["chain", "--m", "2"]);
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--alpha", "0.1", "--buckets", "20",
        "--samples", "4000", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("estimate:"));
    assert!(text.contains("s -> c1 -> t"));
    assert!(text.contains("budget:"));
    // two uniform edges at alpha 0.1 land near 0.95
    let estimate: f64 = text
        .lines()
        .find(|l| l.starts_with("estimate:"))
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((estimate - 0.95).abs() < 0.02, "estimate {estimate}");
}

#[test]
fn run_baseline_with_all_paths_lists_each_path() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["diamond-sequence", "--k", "1"]);
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--algorithm", "baseline", "--samples",
        "500", "--all-paths",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("s -> l0 -> t"));
    assert!(text.contains("s -> u0 -> t"));
}

#[test]
fn run_validation_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["chain", "--m", "1"]);
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--alpha", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_path_budget_exceeded_exits_3() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["diamond-sequence", "--k", "3"]);
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--algorithm", "baseline", "--samples",
        "100", "--path-cap", "4",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_files_exit_4() {
    let out = riskpath(&["run", "--graph", "/nonexistent/g.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn coverage_rejects_result_from_a_different_graph() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["chain", "--m", "2"]);
    let result = dir.path().join("result.json");
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--buckets", "5", "--samples", "200",
        "--out", result.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // grading against the same graph works and reports verdicts
    let report = dir.path().join("report.json");
    let out = riskpath(&[
        "coverage", "--graph", graph.to_str().unwrap(), "--result", result.to_str().unwrap(),
        "--coverage-samples", "2000", "--out", report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("coverage:"));
    assert!(stdout(&out).contains("bounds:"));

    // a different graph is refused
    let other = dir.path().join("other.json");
    let out = riskpath(&["gen", "chain", "--m", "3", "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    let out = riskpath(&[
        "coverage", "--graph", other.to_str().unwrap(), "--result", result.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash mismatch"));
}

#[test]
fn coverage_skips_verdicts_without_closed_forms() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["preset", "--name", "boxrelay"]);
    let result = dir.path().join("result.json");
    let out = riskpath(&[
        "run", "--graph", graph.to_str().unwrap(), "--buckets", "5", "--samples", "200",
        "--out", result.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = riskpath(&[
        "coverage", "--graph", graph.to_str().unwrap(), "--result", result.to_str().unwrap(),
        "--coverage-samples", "500",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("coverage:"));
    assert!(!text.contains("bounds:"));
}

#[test]
fn sweep_writes_the_expected_csv() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["chain", "--m", "2"]);
    let csv = dir.path().join("sweep.csv");
    let out = riskpath(&[
        "sweep", "--graph", graph.to_str().unwrap(), "--kind", "buckets", "--range", "5,10",
        "--samples", "500", "--coverage-samples", "1000", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "param,estimate,coverage,ci_lo,ci_hi,seconds");
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.all(|l| l.split(',').count() == 6));
}

#[test]
fn agents_sweep_replicates_the_chosen_path() {
    let dir = TempDir::new().unwrap();
    let graph = gen_graph(&dir, &["chain", "--m", "2"]);
    let csv = dir.path().join("sweep.csv");
    let out = riskpath(&[
        "sweep", "--graph", graph.to_str().unwrap(), "--kind", "agents", "--range", "1,2",
        "--buckets", "10", "--samples", "500", "--coverage-samples", "1000",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().any(|l| l.starts_with("1,")));
    assert!(text.lines().any(|l| l.starts_with("2,")));
}
