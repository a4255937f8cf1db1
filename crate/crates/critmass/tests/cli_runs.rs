//! End-to-end runs through the config-driven experiment runner.

use critmass::cli::{
    self, CommandKind, ExitStatus, ExperimentConfig, GridConfig, InitialCondition,
};
use critmass::evolution::{Frame, SolverConfig};
use std::path::Path;

fn evolve_config(out: &Path, mass_ratio: f64, initial: InitialCondition) -> ExperimentConfig {
    ExperimentConfig {
        command: CommandKind::Evolve,
        dimension: 3,
        mass_ratio,
        grid: GridConfig {
            r_max: 6.0,
            n_cells: 128,
            stretch: None,
        },
        solver: Some(SolverConfig::new(Frame::Original, 0.02, 0.001)),
        initial,
        output_dir: out.to_path_buf(),
        seed: 7,
    }
}

#[test]
fn evolve_subcritical_emits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = evolve_config(&out, 0.5, InitialCondition::SelfSimilar);
    let status = cli::run_experiment(&cfg).unwrap();
    assert_eq!(status, ExitStatus::Completed);
    assert_eq!(status.code(), 0);

    for name in [
        "manifest.json",
        "run.csv",
        "blowup.json",
        "diagnostics_summary.json",
        "run_stats.json",
        "profile_0000.csv",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let run_csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(
        run_csv.starts_with("t,mass,m2,lm_norm_m,linf,free_energy,rescaled_energy,dissipation,dt")
    );
    let blowup: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("blowup.json")).unwrap()).unwrap();
    assert_eq!(blowup["detected"], false);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("diagnostics_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["virial_residual_final"].is_number());
    assert!(summary["profile_distance_series"].is_array());
}

#[test]
fn evolve_supercritical_reports_blowup_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("boom");
    let mut cfg = evolve_config(&out, 2.0, InitialCondition::Stationary);
    // Detection at the 1e3 sup-norm threshold needs the spike resolved.
    cfg.grid = GridConfig {
        r_max: 1.25,
        n_cells: 192,
        stretch: None,
    };
    cfg.solver = Some(SolverConfig::new(Frame::Original, 0.01, 0.0004));
    let status = cli::run_experiment(&cfg).unwrap();
    assert_eq!(status, ExitStatus::BlowupDetected);
    assert_eq!(status.code(), 2);

    let blowup: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("blowup.json")).unwrap()).unwrap();
    assert_eq!(blowup["detected"], true);
    assert!(blowup["virial_upper_bound"].as_f64().unwrap() > 0.0);
    assert!(blowup["t_detect"].as_f64().unwrap() > 0.0);
    assert!(blowup["lm_at_detect"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_dimension_is_a_config_error() {
    let text = r#"{
        "command": "evolve",
        "dimension": 2,
        "mass_ratio": 0.5,
        "grid": {"R_max": 2.0, "n_cells": 64},
        "initial": {"kind": "gaussian", "params": {"t0": 0.2}},
        "output_dir": "/tmp/never"
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(
        ExperimentConfig::load(&path),
        Err(critmass::Error::ConfigInvalid(_))
    ));
}

#[test]
fn identical_config_and_seed_reproduce_byte_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let cfg = evolve_config(&out, 0.5, InitialCondition::Gaussian { t0: 0.25 });
        cli::run_experiment(&cfg).unwrap();
        outputs.push(out);
    }
    for file in ["run.csv", "profile_0000.csv", "profile_0001.csv"] {
        let a = std::fs::read(outputs[0].join(file)).unwrap();
        let b = std::fs::read(outputs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn profile_and_self_similar_and_vhls_commands_emit_reports() {
    let dir = tempfile::tempdir().unwrap();

    let out = dir.path().join("profile");
    let mut cfg = evolve_config(&out, 1.0, InitialCondition::Stationary);
    cfg.command = CommandKind::Profile;
    cfg.grid.r_max = 1.5;
    assert_eq!(cli::run_experiment(&cfg).unwrap(), ExitStatus::Completed);
    for name in ["zeta.csv", "zeta.json", "profile.csv", "energy_report.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let energy: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("energy_report.json")).unwrap())
            .unwrap();
    // The unit-radius stationary profile carries the critical mass.
    let mass = energy["mass"].as_f64().unwrap();
    assert!((mass - 202.9).abs() < 0.2, "mass {mass}");

    let out = dir.path().join("ss");
    let mut cfg = evolve_config(&out, 0.5, InitialCondition::SelfSimilar);
    cfg.command = CommandKind::SelfSimilar;
    assert_eq!(cli::run_experiment(&cfg).unwrap(), ExitStatus::Completed);
    let ids: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("identities.json")).unwrap())
            .unwrap();
    assert!(ids["nu_M"].as_f64().unwrap() > 0.0);
    assert!(ids["identities"]["moment_vs_free_energy"].as_f64().unwrap() < 1e-6);

    let out = dir.path().join("vhls");
    let mut cfg = evolve_config(&out, 0.005, InitialCondition::Gaussian { t0: 0.1 });
    cfg.command = CommandKind::Vhls;
    cfg.grid = GridConfig {
        r_max: 3.0,
        n_cells: 128,
        stretch: None,
    };
    assert_eq!(cli::run_experiment(&cfg).unwrap(), ExitStatus::Completed);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("vhls_report.json")).unwrap())
            .unwrap();
    let gap = report["relative_gap"].as_f64().unwrap();
    assert!(gap < 0.02, "two-route gap {gap}");
    let log = std::fs::read_to_string(out.join("ascent.csv")).unwrap();
    assert!(log.starts_with("iter,lambda,step,grad_norm"));
}

#[test]
fn constants_report_matches_known_values() {
    let report = cli::constants_report(3).unwrap();
    assert!((report.m - 4.0 / 3.0).abs() < 1e-15);
    assert!((report.c_d - 0.0795775).abs() < 1e-6);
    assert!((report.m_c - 202.8952).abs() < 1e-2);
    assert!((report.c_star_shooting - 2.183).abs() < 2e-3);
    assert!(report.relative_gap <= 1e-2);
    assert!((report.zeta0_unit_ball - 13.7937).abs() < 1e-3);
    let text = serde_json::to_string(&report).unwrap();
    for key in [
        "\"M_c\"",
        "\"C_star_shooting\"",
        "\"C_star_ascent\"",
        "\"relative_gap\"",
    ] {
        assert!(text.contains(key), "{key} missing in {text}");
    }
}

#[test]
fn sweep_runs_every_config_and_aggregates_status() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_dir = dir.path().join("configs");
    std::fs::create_dir_all(&sweep_dir).unwrap();

    let quiet = evolve_config(
        &dir.path().join("out_quiet"),
        0.5,
        InitialCondition::SelfSimilar,
    );
    std::fs::write(
        sweep_dir.join("quiet.json"),
        serde_json::to_string_pretty(&quiet).unwrap(),
    )
    .unwrap();

    let mut boom = evolve_config(
        &dir.path().join("out_boom"),
        2.0,
        InitialCondition::Stationary,
    );
    boom.grid = GridConfig {
        r_max: 1.25,
        n_cells: 192,
        stretch: None,
    };
    boom.solver = Some(SolverConfig::new(Frame::Original, 0.01, 0.0004));
    std::fs::write(
        sweep_dir.join("boom.json"),
        serde_json::to_string_pretty(&boom).unwrap(),
    )
    .unwrap();

    std::env::set_var("CRITMASS_THREADS", "2");
    let status = cli::run_sweep(&sweep_dir).unwrap();
    assert_eq!(status, ExitStatus::BlowupDetected);
    assert!(dir.path().join("out_quiet/run.csv").exists());
    assert!(dir.path().join("out_boom/blowup.json").exists());
}
