use std::process::Command;

use spikeslide::algorithms::Method;
use spikeslide::experiment::ExperimentKind;
use spikeslide::harness::{run_experiment, ExperimentSpec, DETERMINISTIC_COLUMNS};

#[test]
fn experiment_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::Biased1d, 3).with_iterations(25);
    let art = run_experiment(&spec, dir.path()).unwrap();
    assert!(art.runs.iter().all(|r| r.succeeded()));

    for name in ["spec.toml", "observation.csv", "truth.csv", "truth_bias.csv", "metadata.toml", "objective_vs_iteration.svg"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    for r in &art.runs {
        let m = r.method.name();
        let log = std::fs::read_to_string(dir.path().join(format!("{m}_iterations.csv"))).unwrap();
        let mut lines = log.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&header[..2], ["k", "value"]);
        assert!(header.len() > DETERMINISTIC_COLUMNS);
        assert!(lines.count() >= 2);
        assert!(dir.path().join(format!("{m}_bias.csv")).is_file());
    }

    let meta: toml::Value = toml::from_str(&std::fs::read_to_string(dir.path().join("metadata.toml")).unwrap()).unwrap();
    assert!(meta.get("v_min").and_then(|v| v.as_float()).is_some());

    // the written spec reproduces the run
    let again: ExperimentSpec = ExperimentSpec::from_toml(&std::fs::read_to_string(dir.path().join("spec.toml")).unwrap()).unwrap();
    assert_eq!(again, spec);
}

#[test]
fn single_method_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::Fast1d, 1).with_method(Method::Radon2Sfb).with_iterations(30);
    let art = run_experiment(&spec, dir.path()).unwrap();
    assert_eq!(art.runs.len(), 1);
    assert!(art.runs[0].final_value < art.v0);
}

#[test]
fn cli_run_and_check() {
    let bin = env!("CARGO_BIN_EXE_spikeslide");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["run", "--experiment", "fast1d", "--method", "sfb", "--iters", "20", "--seed", "5", "--threads", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sfb_iterations.csv").is_file());

    let bad = Command::new(bin).args(["run", "--experiment", "fast3d", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!bad.status.success());
    let bad = Command::new(bin).args(["run", "--experiment", "fast1d", "--method", "spdps", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!bad.status.success());

    let check = Command::new(bin).args(["check", "--suite", "properties"]).output().unwrap();
    let text = String::from_utf8_lossy(&check.stdout);
    assert!(check.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 6);
}
