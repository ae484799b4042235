//! End-to-end tests of the experiment runner: exit codes, run-directory
//! contents, reproducibility, and the configuration error paths.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hitchin-lab"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("hitchin-lab-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn verify_algebra_passes_and_reruns_byte_identical() {
    let out = tmp("va");
    let status = bin()
        .args(["verify-algebra", "--n", "3", "--samples", "60", "--seed", "7"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let first = std::fs::read(out.join("report.json")).unwrap();
    let status = bin()
        .args(["verify-algebra", "--n", "3", "--samples", "60", "--seed", "7"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let second = std::fs::read(out.join("report.json")).unwrap();
    assert_eq!(first, second, "rerun with the same seed must be byte-identical");
}

#[test]
fn build_bundle_writes_schema() {
    let out = tmp("bb");
    let status = bin().args(["build-bundle", "--n", "3"]).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["n"], 3);
    // complex entries appear as [re, im] pairs
    assert!(bundle["c_weight"][0][5].as_array().map(|a| a.len() == 2).unwrap_or(false));
    assert_eq!(bundle["sigma"].as_array().unwrap().len(), 6);
}

#[test]
fn solve_produces_run_directory_and_diagnose_reuses_it() {
    let out = tmp("solve");
    let status = bin()
        .args([
            "solve", "--n", "2", "--q2", "1e-2", "--radius", "0.6", "--grid", "16x32", "--tol",
            "1e-8",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "solve run must pass");
    for f in ["config.json", "report.json", "fields/metric.csv", "fields/baseline.csv", "fields/diagnostics.csv", "plots/energy.svg"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["assertions"].as_array().unwrap().len() >= 8);

    let status = bin().arg("diagnose").arg("--run").arg(&out).status().unwrap();
    assert!(status.success(), "diagnose on a stored run must pass");
    assert!(out.join("diagnose/report.json").exists());
}

#[test]
fn diagnose_without_fields_fails_cleanly() {
    let out = tmp("empty");
    std::fs::create_dir_all(&out).unwrap();
    let output = bin().arg("diagnose").arg("--run").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("fields/"), "stderr: {stderr}");
}

#[test]
fn invalid_config_lists_every_violation() {
    let out = tmp("bad");
    let output = bin()
        .args(["solve", "--n", "2", "--radius", "1.5", "--tol", "-1", "--grid", "16x32"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("radius"), "stderr: {stderr}");
    assert!(stderr.contains("tol"), "stderr: {stderr}");
    assert!(!out.join("report.json").exists(), "no partial outputs on invalid config");
}

#[test]
fn config_file_overrides_flags() {
    let out = tmp("cfg");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("override.json");
    std::fs::write(&cfg, r#"{"samples": 15}"#).unwrap();
    let status = bin()
        .args(["verify-algebra", "--n", "2", "--samples", "9999", "--seed", "1"])
        .arg("--out")
        .arg(&out)
        .arg("--config")
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 15, "config file must win over the flag");
}

#[test]
fn reference_solve_checks_recovery() {
    let out = tmp("qzero");
    let status = bin()
        .args(["solve", "--n", "2", "--radius", "0.5", "--grid", "16x32"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let ids: Vec<&str> = report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"reference_recovery"));
    assert!(!Path::new(&out).join("fields/baseline.csv").exists());
}
