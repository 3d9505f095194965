//! End-to-end checks of the gossipnet binary: file contracts, determinism,
//! exit codes and the JSON reports.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gossipnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gossipnet"))
        .args(args)
        .current_dir(dir)
        .env_remove("GOSSIPNET_SEED")
        .output()
        .expect("spawn gossipnet")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const PATH2_CDM: &str = r#"{
  "topology": {"kind": "path", "params": [2]},
  "delays": {"mode": "uniform", "tau": 1.0},
  "epsilon": 0.0,
  "instance": {"family": "quadratic", "centers": "e0", "dimension": 1},
  "model": "ppp",
  "algorithm": "cdm",
  "horizon": 20.0,
  "record": {"count": 40},
  "seeds": 1
}"#;

#[test]
fn simulate_path2_reaches_zero_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PATH2_CDM);
    let out = gossipnet(&["simulate", "-c", &cfg, "--out", "o"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("o/run_seed0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,dual_gap,primal_sq_err,consensus_sq_err"
    );
    let last = csv.lines().last().unwrap();
    let gap: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(
        gap, 0.0,
        "two-node averaging must be exact after one arrival"
    );
}

#[test]
fn simulate_writes_per_seed_and_average() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &PATH2_CDM.replace("\"seeds\": 1", "\"seeds\": [1, 2]"),
    );
    let out = gossipnet(&["simulate", "-c", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success());
    assert!(tmp.path().join("o/run_seed1.csv").exists());
    assert!(tmp.path().join("o/run_seed2.csv").exists());
    assert!(tmp.path().join("o/average.csv").exists());
}

#[test]
fn simulate_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &PATH2_CDM
            .replace(
                "\"kind\": \"path\", \"params\": [2]",
                "\"kind\": \"cycle\", \"params\": [8]",
            )
            .replace("\"seeds\": 1", "\"seeds\": 3"),
    );
    let a = gossipnet(&["simulate", "-c", &cfg, "--out", "a"], tmp.path());
    assert!(a.status.success());
    let b = gossipnet(&["simulate", "-c", &cfg, "--out", "b"], tmp.path());
    assert!(b.status.success());
    for name in [
        "run_seed0.csv",
        "run_seed1.csv",
        "run_seed2.csv",
        "average.csv",
    ] {
        let x = fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between reruns");
    }
}

#[test]
fn env_seed_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PATH2_CDM);
    let out = Command::new(env!("CARGO_BIN_EXE_gossipnet"))
        .args(["simulate", "-c", &cfg, "--out", "o"])
        .current_dir(tmp.path())
        .env("GOSSIPNET_SEED", "77")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("o/run_seed77.csv").exists());
    assert!(!tmp.path().join("o/run_seed0.csv").exists());
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        &PATH2_CDM.replace("\"horizon\": 20.0", "\"horizon\": -5.0"),
    );
    let out = gossipnet(&["simulate", "-c", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    // Inconsistent algorithm/model combination.
    let cfg = write_config(
        tmp.path(),
        "bad2.json",
        &PATH2_CDM.replace("\"algorithm\": \"cdm\"", "\"algorithm\": \"sync-gossip\""),
    );
    let out = gossipnet(&["simulate", "-c", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn svg_emission() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", PATH2_CDM);
    let out = gossipnet(&["simulate", "-c", &cfg, "--out", "o", "--svg"], tmp.path());
    assert!(out.status.success());
    let svg = fs::read_to_string(tmp.path().join("o/average.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
    assert!(svg.contains("legend") || svg.contains("mean dual gap"));
}

const GAP_CYCLE50: &str = r#"{
  "topology": {"kind": "cycle", "params": [50]},
  "delays": {"mode": "straggler", "fraction": 0.1, "slow": 100.0, "fast": 1.0},
  "epsilon": 0.0,
  "instance": {"family": "quadratic", "centers": "e0"},
  "model": "ppp",
  "algorithm": "cdm",
  "horizon": 1.0,
  "seeds": [0]
}"#;

#[test]
fn gap_reports_expected_orders() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "g.json", GAP_CYCLE50);
    let out = gossipnet(&["gap", "-c", &cfg], tmp.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // Homogeneous weighting matches the cycle formula.
    let uniform = v["gaps"]["uniform"].as_f64().unwrap();
    let expect = 2.0 * (1.0 - (2.0 * std::f64::consts::PI / 50.0).cos());
    assert!((uniform - expect).abs() < 1e-9);
    // Normalized straggler-weighted gap is of the reported order 1/125000.
    let norm = v["normalized_gaps"]["ppp"].as_f64().unwrap();
    let ratio = (norm * 125_000.0).max(1.0 / (norm * 125_000.0));
    assert!(ratio <= 10.0, "normalized gap {norm} too far from 1/125000");
}

#[test]
fn probe_queue_small_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "p.json",
        &GAP_CYCLE50
            .replace("\"params\": [50]", "\"params\": [10]")
            .replace("\"fraction\": 0.1", "\"fraction\": 0.0"),
    );
    let out = gossipnet(
        &[
            "probe-queue",
            "-c",
            &cfg,
            "--delta",
            "0.1",
            "--trials",
            "300",
        ],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 10);
    assert_eq!(v["all_ok"], serde_json::Value::Bool(true));

    // Deterministic report.
    let again = gossipnet(
        &[
            "probe-queue",
            "-c",
            &cfg,
            "--delta",
            "0.1",
            "--trials",
            "300",
        ],
        tmp.path(),
    );
    assert_eq!(out.stdout, again.stdout);

    // Zero trials is invalid.
    let bad = gossipnet(
        &["probe-queue", "-c", &cfg, "--delta", "0.1", "--trials", "0"],
        tmp.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reproduce_rejects_unknown_figure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gossipnet(&["reproduce", "fig9"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_fig1_writes_overlays() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gossipnet(
        &["reproduce", "fig1", "--seeds", "2", "--out", "o", "--svg"],
        tmp.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["fig1_cycle50.csv", "fig1_grid15x15.csv", "fig1_cycle50.svg"] {
        assert!(tmp.path().join("o").join(name).exists(), "{name} missing");
    }
    let csv = fs::read_to_string(tmp.path().join("o/fig1_cycle50.csv")).unwrap();
    assert!(csv.starts_with("time,cdm_ppp,cacdm_ppp,bound_thm1,bound_thm2"));
}
