use std::process::Command;

use serde_json::Value;

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sim"))
}

#[test]
fn appendix_demo_writes_manifest_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let status = sim()
        .args(["appendix-demo", "--steps", "20", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "appendix-demo");
    assert_eq!(manifest["config"]["steps"], 20);
    assert!(dir.path().join("summary.csv").exists());
    assert!(dir.path().join("state_final.csv").exists());
}

#[test]
fn config_file_is_layered_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"steps": 7, "r": [6.0]}"#).unwrap();
    let status = sim()
        .args(["appendix-demo", "--steps", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["steps"], 3);
    assert_eq!(manifest["config"]["r"][0], 6.0);
}

#[test]
fn invalid_config_exits_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"no_such_field": 1}"#).unwrap();
    let out = sim().args(["soliton-static", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = sim().args(["soliton-static", "--h=-0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    let out = sim().args(["vortex-single", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn auto_time_step_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let status = sim()
        .args(["soliton-static", "--bc", "msd", "--r", "5", "--tend", "0.5", "--k", "auto", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().count() >= 2);
}
