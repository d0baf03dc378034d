//! End-to-end smoke tests driving the installed binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use cellbench_core::params::CellParameters;
use cellbench_core::soh::{synthetic_cycling, SyntheticCyclingSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellbench"))
}

fn base_config(extra: &str) -> String {
    let cell = toml_cell(&CellParameters::default_nmc());
    format!(
        r#"seed = 7

{cell}

[grid]
n_r = 10
n_x_p = 6
n_x_s = 4
n_x_n = 6

[ocp]
negative = "builtin:graphite"
positive = "builtin:nmc"

{extra}
"#
    )
}

fn toml_cell(cell: &CellParameters) -> String {
    // serialize through the config type so nested tables land under [cell]
    #[derive(serde::Serialize)]
    struct Wrap<'a> {
        cell: &'a CellParameters,
    }
    toml::to_string(&Wrap { cell }).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn validate_config_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(
        dir.path(),
        &base_config("[simulation]\ninitial_soc = 0.5\n"),
    );
    let status = bin()
        .args(["--config", ok.to_str().unwrap(), "validate-config"])
        .status()
        .unwrap();
    assert!(status.success());

    // unknown key must fail with exit code 2
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, base_config("[simulation]\nbogus_key = 1\n")).unwrap();
    let status = bin()
        .args(["--config", bad.to_str().unwrap(), "validate-config"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_referenced_file_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &base_config("[simulation]\nprofile = \"nonexistent.csv\"\n"),
    );
    let out = dir.path().join("out");
    let output = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "simulate",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("validation"),
        "stderr should carry a machine-readable record: {stderr}"
    );
}

#[test]
fn simulate_zero_current_profile_holds_voltage() {
    let dir = tempfile::tempdir().unwrap();
    // a rest-only profile file
    let profile = dir.path().join("rest.csv");
    let mut body = String::from("t,i\n");
    for k in 0..=60 {
        body.push_str(&format!("{},0.0\n", k * 5));
    }
    std::fs::write(&profile, body).unwrap();

    let cfg = write_config(
        dir.path(),
        &base_config("[simulation]\ninitial_soc = 0.5\nprofile = \"rest.csv\"\n"),
    );
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "simulate",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(out.join("simulation.csv")).unwrap();
    let voltages: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(voltages.len() == 61);
    for v in &voltages {
        assert!((v - voltages[0]).abs() < 1e-9, "rest voltage moved");
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn soh_train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("cycles.csv");
    synthetic_cycling(
        &SyntheticCyclingSpec {
            cycles: 24,
            ..Default::default()
        },
        5,
    )
    .save_csv(&data)
    .unwrap();

    let cfg = write_config(
        dir.path(),
        &base_config(
            "[soh]\ndata = \"cycles.csv\"\nq_nom = 3.0\nbags = 4\ntop_k = 6\nartifact = \"model.json\"\n",
        ),
    );
    let out = dir.path().join("out");
    let status = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "soh",
            "train",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("model.json").exists());
    assert!(out.join("model.bin").exists());

    let status = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "soh",
            "eval",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("soh_metrics.json")).unwrap())
            .unwrap();
    let rmspe = metrics["rmspe"].as_f64().unwrap();
    assert!(rmspe < 3.0, "in-sample RMSPE {rmspe}% is implausibly large");
    assert!(out.join("soh_error_histogram.csv").exists());
}

#[test]
fn env_var_supplies_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &base_config(""));
    let status = bin()
        .env("CELLBENCH_CONFIG", cfg.to_str().unwrap())
        .arg("validate-config")
        .status()
        .unwrap();
    assert!(status.success());
}
