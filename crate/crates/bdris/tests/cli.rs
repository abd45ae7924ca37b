//! End-to-end checks of the `bdris` binary: exit codes, CSV/SVG emission,
//! and config validation.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bdris"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bdris_cli_{tag}"));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn micro_config_json() -> String {
    // Baseline only, tiny geometry: fast and failure-free.
    serde_json::json!({
        "experiment_id": "cli_micro",
        "geometry": {"m_r": 2, "m_t": 2, "n1": 2, "n2": 2},
        "users": 2,
        "bs_ris_paths": 2,
        "user_paths": 2,
        "p_dbm": 20.0,
        "noise_dbm": null,
        "fc_ghz": 28.0,
        "d_br_m": 10.0,
        "d_ru_m": 50.0,
        "beta_bs_ris": 2.2,
        "beta_ris_user": 2.2,
        "shadow_sigma_db": 0.0,
        "gamma_reestimations": 2,
        "estimators": "baseline",
        "trials": 2,
        "seed": 5,
        "include_timing": false
    })
    .to_string()
}

#[test]
fn validate_config_accepts_and_rejects() {
    let dir = tmpdir("validate");
    let good = dir.join("good.json");
    fs::write(&good, micro_config_json()).unwrap();
    let status = bin()
        .args(["validate-config", "--config"])
        .arg(&good)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let bad = dir.join("bad.json");
    fs::write(&bad, micro_config_json().replace("\"users\":2", "\"users\":2,\"mystery\":1"))
        .unwrap();
    let status = bin()
        .args(["validate-config", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1), "unknown keys must be rejected");

    let status = bin()
        .args(["validate-config", "--config", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn run_and_plot_produce_artifacts() {
    let dir = tmpdir("run");
    let cfg_path = dir.join("micro.json");
    fs::write(&cfg_path, micro_config_json()).unwrap();
    let out = dir.join("out");

    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(&out)
        .args(["--no-plots"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let csv = out.join("cli_micro.csv");
    assert!(csv.exists());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with(
        "experiment_id,trial,M,N,K,P_dBm,estimator,nmse,pilot_slots,wall_time_ms,error_flag"
    ));
    assert_eq!(text.lines().count(), 1 + 2, "header plus one row per trial");

    let status = bin()
        .args(["plot", "--csv"])
        .arg(&csv)
        .args(["--out"])
        .arg(&out)
        .args(["--figure", "pilots"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("pilot_slots_vs_n.svg").exists());
}

#[test]
fn run_exits_2_when_every_trial_fails() {
    let dir = tmpdir("fail");
    let cfg_path = dir.join("fail.json");
    // Proposed estimator with one stage-2 subframe on a 4-antenna BS and
    // N = 16: the identifiability gate (C*M = 4 < 16) fails every trial.
    let json = serde_json::json!({
        "experiment_id": "cli_fail",
        "geometry": {"m_r": 2, "m_t": 2, "n1": 4, "n2": 4},
        "users": 1,
        "bs_ris_paths": 1,
        "user_paths": 1,
        "p_dbm": 20.0,
        "noise_dbm": null,
        "fc_ghz": 28.0,
        "d_br_m": 10.0,
        "d_ru_m": 50.0,
        "beta_bs_ris": 2.2,
        "beta_ris_user": 2.2,
        "shadow_sigma_db": 0.0,
        "gamma_reestimations": 2,
        "stage1": {"g_iota": 20, "g_phi": 20, "known_paths": true},
        "stage2": {"subframes": 1},
        "estimators": "proposed",
        "trials": 2,
        "seed": 5,
        "include_timing": false
    })
    .to_string();
    fs::write(&cfg_path, json).unwrap();
    let out = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(&out)
        .args(["--no-plots"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "all-failed run must exit 2");
    // The CSV still records the failed rows with error flags.
    let text = fs::read_to_string(out.join("cli_fail.csv")).unwrap();
    assert!(text.contains("identifiability violated"));
}

#[test]
fn plot_on_missing_csv_fails() {
    let status = bin()
        .args(["plot", "--csv", "/nonexistent/records.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
