//! End-to-end checks of the runner: exit-code contract, artifact schemas,
//! config echo, and seed determinism.

use std::fs;
use std::process::Command;

use levy_besov_cli::commands::{run_experiment, CommandKind};
use levy_besov_cli::config::ExperimentConfig;
use levy_besov_cli::output::write_per_scale_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-besov"))
}

fn small_config(out_dir: &std::path::Path) -> String {
    format!(
        r#"{{
        "model": {{ "family": "gaussian", "sigma2": 1.0 }},
        "d": 1,
        "window": {{ "extent": 1, "j_fine": 10 }},
        "p_grid": [1.0],
        "replicates": 20,
        "master_seed": 11,
        "j_range": [3, 9],
        "rho_extent": 8192,
        "hill_k": 200,
        "out_dir": "{}"
    }}"#,
        out_dir.display()
    )
}

#[test]
fn missing_config_is_an_error_exit() {
    let status = bin()
        .args(["--config", "/nonexistent/nope.json", "--command", "indices"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn malformed_config_is_an_error_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--command", "verify"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn verify_writes_parseable_report_with_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config(&out)).unwrap();
    let status = bin()
        .args([
            "--config",
            cfg_path.to_str().unwrap(),
            "--command",
            "verify",
            "--threads",
            "2",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["master_seed"], 11);
    assert_eq!(report["config"]["model"]["family"], "gaussian");
    assert_eq!(report["report"]["all_pass"], true);
    assert!(report["timestamp"].as_str().unwrap().ends_with('Z'));
    // the echoed config must itself be a valid config
    let echoed: ExperimentConfig = serde_json::from_value(report["config"].clone()).unwrap();
    assert_eq!(echoed.master_seed, 11);
    // csv artifacts exist with the pinned headers
    let per_scale = fs::read_to_string(out.join("per_scale.csv")).unwrap();
    assert!(per_scale.starts_with("j,gender_count,term_count,T_j,log2_T_j\n"));
    let moments = fs::read_to_string(out.join("moments.csv")).unwrap();
    assert!(moments.starts_with("j,p,mean_abs_p,log2_mean,stderr\n"));
    assert!(out.join("plots/triebel_tau.svg").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config(&out)).unwrap();
    let status = bin()
        .args([
            "--config",
            cfg_path.to_str().unwrap(),
            "--command",
            "verify",
            "--seed",
            "999",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["master_seed"], 999);
}

#[test]
fn empty_per_scale_list_yields_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_per_scale_csv(&path, &[]).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        "j,gender_count,term_count,T_j,log2_T_j\n"
    );
}

#[test]
fn simulate_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg: ExperimentConfig = serde_json::from_str(&small_config(&out)).unwrap();
    let code = run_experiment(&cfg, CommandKind::Simulate).unwrap();
    assert_eq!(code, 0);
    let bytes = fs::read(out.join("coefficients.bin")).unwrap();
    let field = levy_besov_core::field::CoefficientField::read_dump(&bytes[..]).unwrap();
    assert_eq!(field.master_seed, 11);
    assert_eq!(field.d, 1);
    assert!(!field.blocks.is_empty());
}

#[test]
fn indices_command_emits_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg_json = format!(
        r#"{{
        "model": {{ "family": "layered-stable", "alpha1": 1.5, "alpha2": 0.5 }},
        "d": 1,
        "window": {{ "extent": 1, "j_fine": 8 }},
        "out_dir": "{}"
    }}"#,
        out.display()
    );
    let cfg: ExperimentConfig = serde_json::from_str(&cfg_json).unwrap();
    assert_eq!(run_experiment(&cfg, CommandKind::Indices).unwrap(), 0);
    let got: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("indices.json")).unwrap()).unwrap();
    let row = &got["indices"]["closed_form"];
    assert_eq!(row["beta_inf"], 1.5);
    assert_eq!(row["beta_inf_lower"], 1.5);
    assert_eq!(row["p_max"], 0.5);
    assert_eq!(row["pruitt_beta0"], 0.5);
}

#[test]
fn identical_seeds_give_identical_artifacts_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("out{run}"));
        let cfg: ExperimentConfig = serde_json::from_str(&small_config(&out)).unwrap();
        run_experiment(&cfg, CommandKind::Besov).unwrap();
        bodies.push(fs::read(out.join("per_scale.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}
