use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gerryfair::model::Model;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gerryfair"))
        .args(args)
        .env_remove("GERRYFAIR_LOG")
        .output()
        .expect("binary runs")
}

fn data_args(out: &Path) -> Vec<String> {
    vec![
        "--data".into(),
        fixture("example1.csv").display().to_string(),
        "--schema".into(),
        fixture("example1_schema.json").display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ]
}

fn run_with(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub.to_string()];
    args.extend(data_args(out));
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

fn stdout_lines(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stdout).lines().map(str::to_string).collect()
}

/// Rows of a CSV file as f64 fields, header skipped.
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn audit_finds_the_intersectional_group() {
    let dir = TempDir::new().unwrap();
    let pred = fixture("example1_predictions.csv").display().to_string();
    let o = run_with(
        "audit",
        dir.path(),
        &["--predictions", &pred, "--notion", "sp", "--gamma", "0.01"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_lines(&o).len(), 1);
    let cert = read_json(&dir.path().join("certificate.json"));
    assert_eq!(cert["product"].as_f64().unwrap(), 0.125);
    assert_eq!(cert["notion"], "sp");
}

#[test]
fn audit_fp_product() {
    let dir = TempDir::new().unwrap();
    let pred = fixture("example1_predictions.csv").display().to_string();
    let o = run_with(
        "audit",
        dir.path(),
        &["--predictions", &pred, "--notion", "fp", "--gamma", "0.01"],
    );
    assert_eq!(o.status.code(), Some(2));
    let cert = read_json(&dir.path().join("certificate.json"));
    assert_eq!(cert["product"].as_f64().unwrap(), 0.0625);
}

#[test]
fn constant_predictions_are_fair() {
    let dir = TempDir::new().unwrap();
    let pred = fixture("zeros_predictions.csv").display().to_string();
    let o = run_with(
        "audit",
        dir.path(),
        &["--predictions", &pred, "--notion", "sp", "--gamma", "0.01"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&dir.path().join("certificate.json"))["result"], "fair");
}

#[test]
fn missing_file_is_an_error() {
    let dir = TempDir::new().unwrap();
    let o = run_with(
        "audit",
        dir.path(),
        &["--predictions", "/nonexistent/predictions.csv", "--gamma", "0.01"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("predictions.csv"));

    let o = run(&["train", "--data", "/nonexistent.csv", "--schema", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_predictions_are_an_error() {
    let dir = TempDir::new().unwrap();
    // the dataset itself has no D column
    let pred = fixture("example1.csv").display().to_string();
    let o = run_with("audit", dir.path(), &["--predictions", &pred]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fictitious_play_meets_the_constraint() {
    let dir = TempDir::new().unwrap();
    let o = run_with(
        "train",
        dir.path(),
        &["--gamma", "0.01", "--rounds", "2000", "--dynamics", "fictplay"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_lines(&o).len(), 1);

    let header = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "t,error,max_violation,phi,group_id,gapL,gapA"
    );
    let rows = csv_rows(&dir.path().join("trace.csv"));
    assert_eq!(rows.len(), 2000);
    assert!(rows.last().unwrap()[2] <= 0.02, "final row {:?}", rows.last());

    let model = Model::from_json(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    let total: f64 = model.support.iter().map(|s| s.prob).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(model.cap, 10.0);
}

#[test]
fn unconstrained_training_reaches_family_minimum() {
    // labels are independent of both attributes, so every member errs on half
    let dir = TempDir::new().unwrap();
    let o = run_with("train", dir.path(), &["--gamma", "1", "--rounds", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("trace.csv"));
    assert_eq!(rows.last().unwrap()[1], 0.5);
    assert!(rows.iter().all(|r| r[4] == -1.0));
}

#[test]
fn no_regret_training_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let extra = ["--dynamics", "nr", "--gamma", "0.01", "--rounds", "60", "--seed", "7"];
    for dir in [&a, &b] {
        let o = run_with("train", dir.path(), &extra);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trace.csv", "model.json"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn sweep_at_gamma_one_is_a_single_point() {
    let dir = TempDir::new().unwrap();
    let o = run_with(
        "sweep",
        dir.path(),
        &["--gammas", "1", "--rounds", "30", "--notion", "sp"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("pareto.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.5);
    assert_eq!(rows[0][2], 1.0);
    assert!(dir.path().join("trace_0.csv").exists());
}

#[test]
fn sweep_frontier_is_sorted_and_undominated() {
    let dir = TempDir::new().unwrap();
    let o = run_with(
        "sweep",
        dir.path(),
        &[
            "--gammas",
            "0,0.05,0.2",
            "--rounds",
            "200",
            "--seeds",
            "2",
            "--dynamics",
            "nr",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("pareto.csv"));
    assert!(!rows.is_empty());
    for w in rows.windows(2) {
        assert!(w[0][0] <= w[1][0], "error not sorted: {w:?}");
        assert!(w[0][1] > w[1][1], "unfairness not decreasing: {w:?}");
    }
    for i in 0..3 {
        assert_eq!(csv_rows(&dir.path().join(format!("trace_{i}.csv"))).len(), 200);
    }
}

#[test]
fn rejects_invalid_parameters() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run_with("train", dir.path(), &["--gamma", "2"]).status.code(), Some(1));
    assert_eq!(run_with("train", dir.path(), &["--rounds", "0"]).status.code(), Some(1));
    assert_eq!(
        run_with("sweep", dir.path(), &["--gammas", "0.1", "--seeds", "0"])
            .status
            .code(),
        Some(1)
    );
}
