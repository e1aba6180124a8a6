//! End-to-end runs of the `harmlab` binary on the shipped example configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use harmlab_cli::run::RunManifest;
use harmlab_core::analysis::{ClassificationRecord, LambdaVerdict};
use serde_json::Value;
use tempfile::TempDir;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn harmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_example(name: &str, out: &Path) -> Output {
    let cfg = example(&format!("{name}.json"));
    harmlab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn records(dir: &Path) -> Vec<ClassificationRecord> {
    serde_json::from_str(&std::fs::read_to_string(dir.join("classification.json")).unwrap()).unwrap()
}

/// The half-plane example is the slowest; share one run between tests.
fn halfplane_run() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let out = run_example("halfplane", dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dir
    })
    .path()
}

#[test]
fn halfplane_matches_golden_manifest() {
    let dir = halfplane_run();
    let m = manifest(dir);
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(example("halfplane.golden.json")).unwrap()).unwrap();
    assert!(m.complete);
    assert_eq!(m.config_sha256, golden["config_sha256"].as_str().unwrap());
    assert_eq!(m.seed, golden["seed"].as_u64().unwrap());
    assert_eq!(serde_json::to_value(&m.outputs).unwrap(), golden["outputs"]);
    for o in &m.outputs {
        let bytes = std::fs::read(dir.join(&o.path)).unwrap();
        assert_eq!(harmlab_cli::run::sha256_hex(&bytes), o.sha256, "{}", o.path);
    }
}

#[test]
fn halfplane_report_is_all_lambda1() {
    let dir = halfplane_run();
    let csv = dir.join("report.csv");
    let out = harmlab(&[
        "report",
        dir.join("manifest.json").to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let total = text.lines().find(|l| l.starts_with("total,")).unwrap();
    let cells: Vec<usize> = total.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
    // points, L1, L2, L3, L4, undetermined, flat, good, bad, warnings
    assert_eq!(cells[0], 2);
    assert_eq!(cells[1], cells[0], "{text}");
    assert_eq!(cells[6], cells[0], "{text}");
    assert_eq!(cells[7], cells[0], "{text}");
}

#[test]
fn increasing_scales_fail_validation() {
    let dir = TempDir::new().unwrap();
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(example("wedge.json")).unwrap()).unwrap();
    cfg["scales"] = serde_json::json!([0.01, 0.02, 0.04, 0.08]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    for sub in ["validate", "run"] {
        let out = harmlab(&[sub, path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{sub}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("scales"), "{err}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn shipped_configs_validate() {
    for name in ["disc", "halfplane", "wedge", "square", "saddle"] {
        let out = harmlab(&["validate", example(&format!("{name}.json")).to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn disc_demo_writes_arcs_and_flatness() {
    let dir = TempDir::new().unwrap();
    let out = run_example("disc", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est = std::fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    let rows: Vec<&str> = est.lines().skip(1).collect();
    assert_eq!(rows.len(), 16);
    for row in rows {
        let p: f64 = row.split(',').nth(9).unwrap().parse().unwrap();
        assert!((p - 1.0 / 16.0).abs() < 0.005, "{row}");
    }
    let recs = records(dir.path());
    let flat = recs[0].flatness.as_ref().expect("flatness profile");
    assert_eq!(flat.distances.len(), 6);
    assert!(flat.distances.last().unwrap() < flat.distances.first().unwrap());
}

#[test]
fn wedge_corner_and_edges() {
    let dir = TempDir::new().unwrap();
    let out = run_example("wedge", dir.path());
    assert!(out.status.success());
    let recs = records(dir.path());
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[0].lambda.verdict, LambdaVerdict::Lambda2);
    assert!((recs[0].lambda.slope + 4.0 / 3.0).abs() < 0.05, "{:?}", recs[0].lambda);
    for r in &recs[1..] {
        assert_eq!(r.lambda.verdict, LambdaVerdict::Lambda1, "{:?}", r.q);
    }
    let rep = harmlab(&["report", dir.path().join("manifest.json").to_str().unwrap()]);
    assert!(rep.status.success());
    let table = String::from_utf8_lossy(&rep.stdout);
    let total: Vec<&str> = table.lines().last().unwrap().split_whitespace().collect();
    assert_eq!(&total[..4], ["total", "3", "2", "1"], "{table}");
}

#[test]
fn empty_report_warns() {
    let out = harmlab(&["report"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn missing_manifest_is_listed() {
    let dir = TempDir::new().unwrap();
    let gone = dir.path().join("nope").join("manifest.json");
    let out = harmlab(&["report", gone.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("total"));
}

#[test]
fn stage_failure_keeps_partial_results() {
    let dir = TempDir::new().unwrap();
    // one scale is valid config, but no slope can be fitted through it
    let cfg = serde_json::json!({
        "name": "single",
        "domain": {"kind": "ball", "params": {"center": [0.0, 0.0], "radius": 1.0}},
        "walks": {"n_walks": 1000},
        "cells": {"equal_arcs": {"center": [0.0, 0.0], "radius": 1.0, "count": 4}},
        "points": {"explicit": [[1.0, 0.0]]},
        "scales": [0.5],
        "analyses": {"flatness": false, "theta": true},
        "seed": 2
    });
    let path = dir.path().join("starved.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = harmlab(&["run", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert!(!m.complete);
    for file in ["estimate.csv", "theta.csv"] {
        assert!(m.outputs.iter().any(|o| o.path == file), "{file}");
    }
    let failed: Vec<&str> = m.stages.iter().filter(|s| s.error.is_some()).map(|s| s.name.as_str()).collect();
    assert_eq!(failed, ["dimension"]);
}

#[test]
fn seed_override_changes_walks() {
    let dir = TempDir::new().unwrap();
    let cfg = example("square.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, seed) in [(&a, "11"), (&b, "12")] {
        let out = harmlab(&["run", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success());
    }
    let ma = manifest(&a);
    let mb = manifest(&b);
    assert_eq!(ma.seed, 11);
    assert_eq!(mb.seed, 12);
    let csv = |m: &RunManifest| m.outputs.iter().find(|o| o.path == "classification.csv").unwrap().sha256.clone();
    assert_ne!(csv(&ma), csv(&mb));
}
