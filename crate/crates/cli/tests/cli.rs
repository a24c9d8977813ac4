//! End-to-end checks of the command-line binary: numeric output of the
//! spectrum command, byte-identical determinism across reruns, simulation
//! CSV artifacts, the pipeline document, and a reproduce run.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dde-ssm"))
}

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dde-ssm-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary should run");
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout should be UTF-8")
}

fn parse_f(v: &Value) -> f64 {
    v.as_str().expect("formatted number").parse().expect("parseable f64")
}

#[test]
fn spectrum_reports_the_dominant_cushing_root() {
    let stdout = run_ok(bin().args([
        "spectrum",
        "--system",
        systems_dir().join("cushing.toml").to_str().unwrap(),
        "--gamma",
        "-5",
    ]));
    let doc: Value = serde_json::from_str(&stdout).expect("valid JSON");
    let roots = doc["roots"].as_array().expect("roots array");
    assert!(!roots.is_empty());
    let top = roots
        .iter()
        .map(|r| parse_f(&r["re"]))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        (top - (-0.36137016968652919)).abs() < 1e-9,
        "dominant root {top}"
    );
    assert_eq!(doc["manifest"]["subcommand"], "spectrum");
    assert!(doc["manifest"]["system_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "ssm".to_string(),
        "--system".into(),
        systems_dir().join("delayed_cubic_hopf.toml").to_str().unwrap().into(),
        "--gamma".into(),
        "-1.2".into(),
        "--sigma-cut".into(),
        "-0.5".into(),
        "--style".into(),
        "nf".into(),
    ];
    let first = run_ok(bin().args(&args));
    let second = run_ok(bin().args(&args));
    assert_eq!(first, second, "ssm output must be deterministic");
    assert!(first.contains("\"normal_form\""));
}

#[test]
fn simulate_writes_a_trajectory_csv() {
    let dir = scratch("simulate");
    let csv_path = dir.join("traj.csv");
    run_ok(bin().args([
        "simulate",
        "--system",
        systems_dir().join("cushing.toml").to_str().unwrap(),
        "--history",
        "const:0.1",
        "--t-end",
        "10",
        "--csv",
        csv_path.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&csv_path).expect("CSV written");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x_1"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, x) = l.split_once(',').expect("two columns");
            (t.parse().unwrap(), x.parse().unwrap())
        })
        .collect();
    assert!(rows.len() > 100);
    assert!((rows[0].1 - 0.1).abs() < 1e-12, "history value at t = 0");
    // The dominant root is stable: the trajectory must have decayed.
    let last = rows.last().unwrap();
    assert!(last.0 >= 10.0 - 1e-9);
    assert!(last.1.abs() < 0.1 * 0.5, "decay by t = 10, got {}", last.1);
    // Side manifest records the artifact.
    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("traj.manifest.json")).expect("manifest written"),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn pipeline_produces_consistent_stages() {
    let stdout = run_ok(bin().args([
        "pipeline",
        "--system",
        systems_dir().join("cushing.toml").to_str().unwrap(),
        "--gamma",
        "-5",
        "--sigma-cut",
        "-1",
        "--validate",
    ]));
    let doc: Value = serde_json::from_str(&stdout).expect("valid JSON");
    let stages = doc["stages"].as_object().expect("stages object");
    for name in ["spectrum", "projection", "ssm", "im_gap", "im_small_delay", "validation"] {
        assert_eq!(
            stages[name]["ok"], true,
            "stage {name}: {:?}",
            stages[name]["error"]
        );
    }
    let validation = &stages["validation"]["result"];
    let expected = parse_f(&validation["expected_rate"]);
    let fitted = parse_f(&validation["fitted_rate"]);
    assert!(
        (expected - fitted).abs() < 1e-4,
        "decay fit {fitted} vs eigenvalue {expected}"
    );
    // Certificates embedded in the document must replay.
    assert_eq!(stages["im_gap"]["result"]["replays"], true);
}

#[test]
fn reproduce_emits_artifacts_with_manifest() {
    let dir = scratch("reproduce");
    run_ok(bin().args([
        "reproduce",
        "--example",
        "cushing",
        "--out",
        dir.to_str().unwrap(),
    ]));
    for name in ["fig1_spectra.csv", "cushing.json", "manifest.json"] {
        assert!(dir.join(name).exists(), "missing artifact {name}");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "reproduce");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("cushing.json")).unwrap()).unwrap();
    assert_eq!(summary["b=-0.3"]["reduced"]["kind"], "real");
    assert_eq!(summary["b=-3"]["reduced"]["kind"], "planar");
    let _ = std::fs::remove_dir_all(&dir);
}
