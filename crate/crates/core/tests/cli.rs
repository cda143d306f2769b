use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SCALAR: &str = r#"{"d": 1, "mu": [1.0], "kernels": [{"i": 1, "j": 1, "type": "exp", "alpha": 0.5, "beta": 1.0}]}"#;
const POISSON: &str = r#"{"d": 2, "mu": [1.0, 0.5], "kernels": []}"#;
const UNSTABLE: &str = r#"{"d": 1, "mu": [1.0], "kernels": [{"i": 1, "j": 1, "type": "exp", "alpha": 1.2, "beta": 1.0}]}"#;

fn hawkes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawkes")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn trees_count() {
    let out = hawkes(&["trees", "--n", "4", "--count-only"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "26");
    let out = hawkes(&["trees", "--n", "10", "--count-only"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "282137824");
}

#[test]
fn trees_listing_and_size_limit() {
    let out = hawkes(&["trees", "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "4");
    assert_eq!(lines[1..].len(), 4);
    assert!(lines.contains(&"(1,2,3)"));
    assert_eq!(hawkes(&["trees", "--n", "9"]).status.code(), Some(6));
}

#[test]
fn analytic_scalar_values() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", SCALAR);
    let m = model.to_str().unwrap();
    let v = stdout_json(&hawkes(&["analytic", "--model", m, "--types", "1,1", "--integrated"]));
    assert!((v["value"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    let v = stdout_json(&hawkes(&["analytic", "--model", m, "--types", "1,1,1", "--integrated"]));
    assert!((v["value"].as_f64().unwrap() - 64.0).abs() < 1e-12);
    let v = stdout_json(&hawkes(&["analytic", "--model", m, "--types", "1,1", "--integrated", "--motif-max-power", "3"]));
    let sums: Vec<f64> = v["partial_sums"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(sums, vec![2.0, 4.0, 5.5, 6.5]);
}

#[test]
fn analytic_density_and_grid() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", POISSON);
    let m = model.to_str().unwrap();
    let v = stdout_json(&hawkes(&["analytic", "--model", m, "--types", "2,2", "--density", "--lags", "0"]));
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["atoms"].as_array().unwrap().len(), 1);

    let scalar = write(dir.path(), "s.json", SCALAR);
    let grid = dir.path().join("grid.csv");
    let out = hawkes(&[
        "analytic",
        "--model",
        scalar.to_str().unwrap(),
        "--types",
        "1,1",
        "--density",
        "--lags",
        "1.0",
        "--grid-out",
        grid.to_str().unwrap(),
        "--lag-max",
        "2",
        "--lag-step",
        "0.5",
    ]);
    assert!(stdout_json(&out)["value"].as_f64().unwrap() > 0.0);
    let rows = std::fs::read_to_string(&grid).unwrap();
    assert!(rows.lines().count() > 5);
}

#[test]
fn simulate_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", SCALAR);
    let m = model.to_str().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = hawkes(&["simulate", "--model", m, "--T", "500", "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert!(bytes.starts_with(b"time,type,cluster_id,parent_row,generation"));

    let stdout = hawkes(&["simulate", "--model", m, "--T", "500", "--seed", "42"]);
    assert_eq!(stdout.stdout, bytes);
    let other = hawkes(&["simulate", "--model", m, "--T", "500", "--seed", "43"]);
    assert_ne!(other.stdout, bytes);
}

#[test]
fn estimate_from_simulated_csv() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", SCALAR);
    let m = model.to_str().unwrap();
    let events = dir.path().join("e.csv");
    let e = events.to_str().unwrap();
    assert!(hawkes(&["simulate", "--model", m, "--T", "20000", "--seed", "1", "--out", e]).status.success());
    let v = stdout_json(&hawkes(&[
        "estimate", "--events", e, "--types", "1,1", "--mode", "integrated", "--model", m, "--T", "20000",
    ]));
    let value = v["estimate"]["value"].as_f64().unwrap();
    let se = v["estimate"]["se"].as_f64().unwrap();
    assert!((value - 8.0).abs() <= 3.0 * se, "{value} +- {se}");

    let thin = dir.path().join("t.csv");
    let t = thin.to_str().unwrap();
    assert!(hawkes(&["simulate", "--model", m, "--T", "2000", "--seed", "1", "--sampler", "thinning", "--out", t])
        .status
        .success());
    let out = hawkes(&["estimate", "--events", t, "--types", "1,1", "--mode", "coincidence", "--model", m]);
    assert_eq!(out.status.code(), Some(10));
}

#[test]
fn verify_scalar_passes() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", SCALAR);
    let out = hawkes(&["verify", "--model", model.to_str().unwrap(), "--seed", "42"]);
    let v = stdout_json(&out);
    assert_eq!(v["all_pass"], Value::Bool(true));
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.len() >= 3, "{names:?}");
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let unstable = write(dir.path(), "u.json", UNSTABLE);
    let u = unstable.to_str().unwrap();
    let out_path = dir.path().join("never.csv");
    let out = hawkes(&["simulate", "--model", u, "--T", "10", "--seed", "1", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_path.exists());
    assert_eq!(hawkes(&["verify", "--model", u, "--seed", "1"]).status.code(), Some(3));
    assert_eq!(hawkes(&["analytic", "--model", u, "--types", "1,1", "--integrated"]).status.code(), Some(3));

    let scalar = write(dir.path(), "s.json", SCALAR);
    let s = scalar.to_str().unwrap();
    // unknown flag, missing file, bad type index
    assert_eq!(hawkes(&["trees", "--bogus"]).status.code(), Some(2));
    assert_eq!(hawkes(&["analytic", "--model", "/nonexistent.json", "--types", "1", "--integrated"]).status.code(), Some(2));
    assert_eq!(hawkes(&["analytic", "--model", s, "--types", "2", "--integrated"]).status.code(), Some(2));
    // density past the renewal horizon and beyond the default order limit
    assert_eq!(
        hawkes(&["analytic", "--model", s, "--types", "1,1", "--density", "--lags", "1000"]).status.code(),
        Some(8)
    );
    assert_eq!(
        hawkes(&["analytic", "--model", s, "--types", "1,1,1,1", "--density", "--lags", "0,0,0"]).status.code(),
        Some(6)
    );
    let cap = hawkes(&["simulate", "--model", s, "--T", "10", "--seed", "1", "--event-cap", "1"]);
    assert_eq!(cap.status.code(), Some(12));
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_hawkes"))
        .args(["trees", "--n", "3"])
        .env("HAWKES_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
