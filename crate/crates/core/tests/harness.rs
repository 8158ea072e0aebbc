use std::process::Command;

use ising_infer::harness::{emit, read_table, run_experiment, ExperimentConfig, Format, Table};
use ising_infer::Error;

fn config(dir: &std::path::Path, body: &str) -> ExperimentConfig {
    let text = format!("{body}\noutput_path = \"{}\"\n", dir.join("out").display());
    ExperimentConfig::from_toml(&text).unwrap()
}

const POWER: &str = "experiment = \"power_curve\"\nn = 64\ntheta0 = 1.5\nh_grid = [0.0, 2.0]\nreps = 200\ncalibration_reps = 1000\nlimit_draws = 20000\nmaster_seed = 11";

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), POWER);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.metadata.config_sha256, cfg.hash());

    let mut other = cfg.clone();
    other.master_seed = 12;
    assert_ne!(run_experiment(&other).unwrap().records, a.records);
}

#[test]
fn emitted_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), POWER);
    let out = run_experiment(&cfg).unwrap();
    for format in [Format::Csv, Format::Json] {
        let paths = emit(&out, &cfg, format).unwrap();
        assert_eq!(paths.len(), 2);
        let (meta, records) = read_table(&paths[0]).unwrap();
        assert_eq!(meta.as_ref(), Some(&out.metadata));
        assert_eq!(records.columns, out.records.columns);
        assert_eq!(records.len(), out.records.len());
        let want = out.records.floats("stat_ms").unwrap();
        let got = records.floats("stat_ms").unwrap();
        assert_eq!(want, got);
        let (_, summary) = read_table(&paths[1]).unwrap();
        assert_eq!(summary.len(), out.summary.len());
    }
}

#[test]
fn empty_tables_are_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), POWER);
    let mut out = run_experiment(&cfg).unwrap();
    out.records = Table::new(&["h"]);
    assert!(emit(&out, &cfg, Format::Csv).is_err());
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn every_experiment_kind_runs() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "experiment = \"estimator_law\"\nn = 400\ntheta0 = 1.5\nreps = 40",
        "experiment = \"estimator_law\"\nn = 400\nreps = 40\nlimit_draws = 20000",
        "experiment = \"limit_law_density\"\nlimit_draws = 20000\ngrid_points = 41",
        "experiment = \"normalizer_check\"\nn_grid = [1000, 10000]\ntheta0 = 1.5",
        "experiment = \"spectrum_report\"\nfamily = \"cyclic\"\nq = 5\nn = 20",
    ] {
        let cfg = config(dir.path(), body);
        let out = run_experiment(&cfg).unwrap_or_else(|e| panic!("{body}: {e}"));
        assert!(!out.records.is_empty() && !out.summary.is_empty(), "{body}");
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "experiment = \"power_curve\"\nalpha = 0\noutput_path = \"{}\"\n",
        dir.path().join("x").display()
    );
    match ExperimentConfig::from_toml(&text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "alpha"),
        other => panic!("{other:?}"),
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ising-infer"))
}

#[test]
fn cli_run_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    let text = format!(
        "experiment = \"spectrum_report\"\nfamily = \"bipartite\"\nn = 10\noutput_path = \"{}\"\n",
        dir.path().join("res").display()
    );
    std::fs::write(&path, text).unwrap();
    let status = cli().arg("run").arg(&path).status().unwrap();
    assert!(status.success());
    assert!(dir.path().join("res.records.csv").exists());
    assert!(dir.path().join("res.summary.csv").exists());
}

#[test]
fn cli_exit_codes() {
    let bad = cli()
        .args(["spectra", "--family", "q-partite", "--q", "7", "--n", "10"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());

    let missing = cli()
        .args(["run", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let ok = cli()
        .args(["spectra", "--family", "complete", "--n", "5"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["spectrum"]["finite_eigs"].as_array().unwrap().len(), 5);
}
