use std::process::Command;

use dbmlab_cli::{run, run_experiment, verify_outputs, Experiment, RunConfig, StatFunction};
use serde_json::Value;

fn config(experiment: Experiment, dir: &std::path::Path) -> RunConfig {
    RunConfig {
        out: dir.to_path_buf(),
        ..RunConfig::new(experiment)
    }
}

#[test]
fn semicircle_reruns_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::Semicircle, d1.path());
    c.n = 200;
    c.n_samples = 5;
    c.seed = 7;
    let a = run(&c, 1).unwrap();
    c.out = d2.path().to_path_buf();
    let b = run(&c, 8).unwrap();
    assert_eq!(a.summary, b.summary);
    let on_disk = std::fs::read_to_string(d1.path().join("summary.json")).unwrap();
    assert_eq!(on_disk, a.summary);
    assert_eq!(
        std::fs::read(d1.path().join("rows.csv")).unwrap(),
        std::fs::read(d2.path().join("rows.csv")).unwrap()
    );
}

#[test]
fn manifest_lists_and_verifies_every_artifact() {
    let d = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::KernelCheck, d.path());
    c.n = 50;
    run(&c, 1).unwrap();
    let m = verify_outputs(d.path()).unwrap();
    let files: Vec<&str> = m.artifacts.iter().map(|a| a.file.as_str()).collect();
    assert_eq!(files, ["summary.json", "rows.csv", "kernel_grid.csv"]);
    for entry in std::fs::read_dir(d.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(
            name == "manifest.json" || files.contains(&name.as_str()),
            "{name} not in manifest"
        );
    }
    std::fs::write(d.path().join("rows.csv"), "tampered\n").unwrap();
    assert!(verify_outputs(d.path()).is_err());
}

#[test]
fn kernel_check_passes_bound_constants_through() {
    let d = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::KernelCheck, d.path());
    c.n = 100;
    let o = run_experiment(&c, 1).unwrap();
    let table = dbmlab_core::semicircle::QuantileTable::new(100).unwrap();
    let direct = dbmlab_core::kernel::kernel_bound_check(c.t(), &table, c.alpha).unwrap();
    assert_eq!(
        o.results["bounds"]["c_upper"].as_f64().unwrap(),
        direct.c_upper
    );
    assert_eq!(o.results["bounds"]["c_sum"].as_f64().unwrap(), direct.c_sum);
    assert_eq!(
        o.results["bounds"]["c_derivative"].as_f64().unwrap(),
        direct.c_derivative
    );
    assert!(o.passed(), "{:?}", o.checks);
}

#[test]
fn clt_of_the_trace() {
    let d = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::Clt, d.path());
    c.n = 400;
    c.n_samples = 300;
    c.functions = vec![StatFunction::X];
    let o = run_experiment(&c, 2).unwrap();
    let f = &o.results["functions"][0];
    assert!((f["sigma2_analytic"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    let ci: Vec<f64> = f["sigma2_ci"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(ci[0] <= 2.0 && 2.0 <= ci[1], "{ci:?}");
    assert_eq!(o.rows.lines().count(), 301);
}

#[test]
fn replica_count_is_independent_of_workers() {
    let d = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::Gaps, d.path());
    c.n = 40;
    c.n_samples = 7;
    for w in [1, 2, 3, 8] {
        let o = run_experiment(&c, w).unwrap();
        assert_eq!(o.rows.lines().count(), 8);
        assert_eq!(o.results["gaps"].as_u64().unwrap() as usize % 7, 0);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    let mut c = config(Experiment::Loop, d.path());
    c.n = 1;
    c.energy = 2.5;
    let e = run_experiment(&c, 1).unwrap_err().to_string();
    assert!(e.contains("n:") && e.contains("energy:"), "{e}");
    assert!(run_experiment(&config(Experiment::Loop, d.path()), 0).is_err());
}

fn dbmlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dbmlab"))
}

#[test]
fn binary_runs_with_config_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"n": 30, "n_samples": 3, "seed": 5, "dt": {"policy": "fixed", "dt": 0.001}}"#,
    )
    .unwrap();
    let out = d.path().join("run");
    let status = dbmlab()
        .args(["semicircle", "--config"])
        .arg(&cfg)
        .args(["--n", "40", "--workers", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["n"], 40);
    assert_eq!(summary["config"]["seed"], 5);
    assert_eq!(summary["config"]["dt"]["policy"], "fixed");
    assert!(summary["config"].get("out").is_none());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 2);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let verify = dbmlab()
        .args(["semicircle", "--verify", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(verify.success());
    // 3 samples at N = 40 cannot reach the KS ceiling.
    let asserted = dbmlab()
        .args([
            "semicircle",
            "--assert",
            "--n",
            "40",
            "--n_samples",
            "3",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(asserted.code(), Some(1));
    let bad = dbmlab()
        .args(["semicircle", "--n", "1", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
