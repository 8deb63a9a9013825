use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hypoctl_core::spectral_field::SpectralField;
use serde_json::Value;

fn hypoctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypoctl")).args(args).output().unwrap()
}

fn run_in(dir: &Path, scenario: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", scenario, "--output-dir", out];
    args.extend_from_slice(extra);
    hypoctl(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const THRESHOLD: &str = r#"
name = "small_threshold"
seed = 3

[equation]
kind = "ou"
q = [[0.0, 0.0], [0.0, 1.0]]
b = [[0.0, 1.0], [0.0, 0.0]]
horizon = 3.0

[support]
kind = "flow"
drift = [[0.0, 1.0], [0.0, 0.0]]
orientation = "backward"
base = { type = "translation_cone", theta0 = 0.7853981633974483 }

[experiment]
kind = "threshold"
samples = 20000
bracket = [1.0, 4.0]
tol = 0.02
expected = [1.85, 2.15]

[experiment.centers]
ring = 32
ring_distance = 1e4
lattice = 3
lattice_extent = 100.0
"#;

#[test]
fn list_shows_the_shipped_scenarios() {
    let out = hypoctl(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.contains("kolmogorov_translation_threshold"));

    let out = hypoctl(&["list", "--json"]);
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rows.len() >= 6);
    assert!(rows
        .iter()
        .all(|r| r["experiment"].is_string() && !r["description"].as_str().unwrap().is_empty()));
}

#[test]
fn negative_horizon_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &THRESHOLD.replace("horizon = 3.0", "horizon = -3.0"));
    let out = run_in(&dir.path().join("out"), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":9: equation.horizon"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn syntax_and_schema_errors_carry_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &THRESHOLD.replace("tol = 0.02", "tol = 0.02\ntolerance = 1"),
    );
    let out = run_in(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("tolerance") && err.contains(":22:"), "{err}");

    let cfg = write_config(
        dir.path(),
        &THRESHOLD
            .replace("points", "")
            .replace("samples = 20000", "samples = ["),
    );
    let out = run_in(dir.path(), &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));

    let out = hypoctl(&["run", "no_such_scenario"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn translation_threshold_lands_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THRESHOLD);
    let out_dir = dir.path().join("out");
    let out = run_in(&out_dir, &cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&out_dir);
    let t = s["results"]["t_star"].as_f64().unwrap();
    assert!((1.85..=2.15).contains(&t), "{t}");
    assert_eq!(s["seed"], 3);
    let csv = fs::read_to_string(out_dir.join("threshold.csv")).unwrap();
    assert!(csv.starts_with("horizon,min_value,min_std_err,holds\n"));
}

#[test]
fn unreached_threshold_exits_with_a_negative_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &THRESHOLD.replace("bracket = [1.0, 4.0]", "bracket = [1.0, 1.5]"),
    );
    let out_dir = dir.path().join("out");
    let out = run_in(&out_dir, &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out_dir);
    assert_eq!(s["verdict"], "negative");
    assert_eq!(s["results"]["threshold_reached"], false);
}

#[test]
fn heat_lattice_certify_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "heat_lattice_certify", &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("certify.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "epsilon,c_found,terminal_ratio,control_energy,lhs,rhs,iterations,cg_status,costs_tried,status"
    );
    assert_eq!(lines.len(), 4);
    // smaller rates need at least as much cost
    let costs: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1]), "{costs:?}");
    assert!(lines[1..].iter().all(|l| l.ends_with(",certified")));
}

#[test]
fn empty_support_is_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "empty"

[equation]
kind = "heat"
dim = 1
horizon = 1.0

[grid]
half_width = 8.0
points = 64

[support]
kind = "fixed"
base = { type = "empty" }

[experiment]
kind = "certify"
epsilons = [0.1]
nodes = 16
cap_exponent = 4
datum = { center = [0.0], sigma = 1.0 }
"#;
    let cfg = write_config(dir.path(), text);
    let out_dir = dir.path().join("out");
    let out = run_in(&out_dir, &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    let row = &summary(&out_dir)["results"]["rows"][0];
    assert_eq!(row["status"], "not_certified");
    assert_eq!(row["costs_tried"], 5);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run_in(d, "heat_lattice_synthesize", &["--emit-fields", "--seed", "11"]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["summary.json", "node_energy.csv", "h0.bin", "terminal.bin", "f0.bin"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let s = summary(&a);
    assert_eq!(s["seed"], 11);
    assert_eq!(s["config_sha256"].as_str().unwrap().len(), 64);
    let ledger: Value = serde_json::from_str(&fs::read_to_string(a.join("run_ledger.json")).unwrap()).unwrap();
    assert!(ledger["wall_time_s"].as_f64().unwrap() >= 0.0);

    let h0 = SpectralField::read_binary(&a.join("h0.bin")).unwrap();
    let norm = s["results"]["solution"]["ledger"]["terminal_identity_defect"]
        .as_f64()
        .unwrap();
    assert_eq!(h0.grid().points(), 256);
    assert!(norm < 1e-8);
}
