//! End-to-end checks of the binary: exit codes, artifact layout, and
//! byte-stable demo output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zonoloc"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn validate_config_accepts_the_shipped_presets() {
    for name in ["benchmark.toml", "quick.toml"] {
        let out = run(&["validate-config", "--config", preset(name).to_str().unwrap()]);
        assert!(out.status.success(), "{} rejected: {:?}", name, out);
        assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
    }
}

#[test]
fn missing_config_exits_with_usage_error() {
    let out = run(&["validate-config", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    let mut text = std::fs::read_to_string(preset("quick.toml")).unwrap();
    text.push_str("\nextra_knob = 3\n");
    std::fs::write(&path, text).unwrap();
    let out = run(&["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_records_and_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--config",
        preset("quick.toml").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{:?}", out);
    let lines = std::fs::read_to_string(out_dir.join("run.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 8 * 4, "one record per agent-step");
    assert!(out_dir.join("episode.json").exists());
}

#[test]
fn misdeclared_noise_bounds_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overdriven.toml");
    let text = std::fs::read_to_string(preset("quick.toml")).unwrap();
    let text = text.replace("truth_noise_scale = 1.0", "truth_noise_scale = 3.0");
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{:?}", out);
}

#[test]
fn demo_output_matches_the_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("demo");
    let out = run(&["demo", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{:?}", out);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in ["summary.json", "ratios.csv"] {
        let got = std::fs::read(out_dir.join(name)).unwrap();
        let want = std::fs::read(golden.join(name)).unwrap();
        assert_eq!(got, want, "{} drifted from the golden copy", name);
    }
}

#[test]
fn seed_override_changes_the_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for seed in ["1", "2"] {
        let out_dir = dir.path().join(seed);
        let out = run(&[
            "montecarlo",
            "--config",
            preset("quick.toml").to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
            "--runs",
            "1",
        ]);
        assert!(out.status.success(), "{:?}", out);
        summaries.push(std::fs::read(out_dir.join("summary.json")).unwrap());
    }
    assert_ne!(summaries[0], summaries[1]);
}
