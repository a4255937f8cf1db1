//! Experiment runner: JSON config in, CSV/JSON artifacts out.
//!
//! A config names one of four commands (profile, self_similar, vhls,
//! evolve), the dimension, the mass as a ratio M/M_c (so the trichotomy
//! reads directly off the config), the grid, solver settings, and the
//! initial condition. Runs are deterministic given (config, seed) and every
//! output directory receives a `manifest.json` recording the config hash and
//! the constants in effect.

use crate::diagnostics;
use crate::energetics::EnergyReport;
use crate::error::{Error, Result};
use crate::evolution::{self, SolverConfig};
use crate::radial_core::{ModelParams, RadialGrid, RadialProfile};
use crate::stationary_profiles::{self, ShootingSolution};
use crate::vhls_search::{self, AscentConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Profile,
    SelfSimilar,
    Vhls,
    Evolve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub n_cells: usize,
    /// Optional geometric stretch factor for blow-up runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, dimension: usize) -> Result<Arc<RadialGrid>> {
        let grid = match self.stretch {
            Some(g) => RadialGrid::stretched(dimension, self.r_max, self.n_cells, g)?,
            None => RadialGrid::uniform(dimension, self.r_max, self.n_cells)?,
        };
        Ok(grid.into_shared())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum InitialCondition {
    /// (M/M_c) V with V the unit-radius stationary profile.
    Stationary,
    /// The self-similar profile at mass M = mass_ratio M_c.
    SelfSimilar,
    /// Heat-kernel bump of mass M at spread t0.
    Gaussian { t0: f64 },
    /// Flat ball of mass M and the given radius.
    Ball { radius: f64 },
    /// Snapshot CSV re-read onto the run grid.
    File { path: PathBuf },
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub dimension: usize,
    /// M / M_c; absolute masses are derived from the computed M_c.
    pub mass_ratio: f64,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 3 {
            return Err(Error::config(format!(
                "dimension must be >= 3, got {}",
                self.dimension
            )));
        }
        if !(self.mass_ratio > 0.0) {
            return Err(Error::config(format!(
                "mass_ratio must be positive, got {}",
                self.mass_ratio
            )));
        }
        if !(self.grid.r_max > 0.0) || self.grid.n_cells < 8 {
            return Err(Error::config("grid needs R_max > 0 and n_cells >= 8"));
        }
        if let Some(solver) = &self.solver {
            solver.validate()?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(&path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.as_ref().display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Final status of a run; blow-up is an outcome, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Completed,
    BlowupDetected,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Completed => 0,
            ExitStatus::BlowupDetected => 2,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config_hash: String,
    tool_version: &'a str,
    constants: ManifestConstants,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct ManifestConstants {
    d: usize,
    m: f64,
    sigma_d: f64,
    c_d: f64,
    #[serde(rename = "M_c")]
    m_c: f64,
    #[serde(rename = "C_star")]
    c_star: f64,
}

/// Dimension-dependent constants with the two independent C_* routes.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub d: usize,
    pub m: f64,
    pub sigma_d: f64,
    pub c_d: f64,
    pub zeta0_unit_ball: f64,
    #[serde(rename = "M_c")]
    pub m_c: f64,
    #[serde(rename = "C_star_shooting")]
    pub c_star_shooting: f64,
    #[serde(rename = "C_star_ascent")]
    pub c_star_ascent: f64,
    pub relative_gap: f64,
}

/// Solve both routes to C_* for one dimension.
pub fn constants_report(dimension: usize) -> Result<ConstantsReport> {
    let params = ModelParams::new(dimension)?;
    let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9)?;
    let fine = RadialGrid::uniform(dimension, 1.0, 8192)?.into_shared();
    let c_star_shooting = stationary_profiles::estimate_cstar(&params, &sol, fine)?;

    let ascent_grid = RadialGrid::uniform(dimension, 3.0, 256)?.into_shared();
    let init = RadialProfile::gaussian(ascent_grid, 1.0, 0.1)?;
    let ascent = vhls_search::maximize_lambda(&init, &AscentConfig::default())?;

    Ok(ConstantsReport {
        d: dimension,
        m: params.m,
        sigma_d: params.sigma_d,
        c_d: params.c_d,
        zeta0_unit_ball: sol.central_value,
        m_c: sol.mass,
        c_star_shooting,
        c_star_ascent: ascent.lambda,
        relative_gap: (c_star_shooting - ascent.lambda).abs() / c_star_shooting,
    })
}

struct Workspace {
    params: ModelParams,
    lane_emden: ShootingSolution,
    m_c: f64,
    c_star: f64,
}

fn prepare_workspace(cfg: &ExperimentConfig) -> Result<Workspace> {
    let params = ModelParams::new(cfg.dimension)?;
    let lane_emden = stationary_profiles::lane_emden_unit_ball(&params, 1e-9)?;
    let m_c = lane_emden.mass;
    let fine = RadialGrid::uniform(cfg.dimension, 1.0, 4096)?.into_shared();
    let c_star = stationary_profiles::estimate_cstar(&params, &lane_emden, fine)?;
    Ok(Workspace {
        params,
        lane_emden,
        m_c,
        c_star,
    })
}

fn write_manifest(cfg: &ExperimentConfig, ws: &Workspace) -> Result<()> {
    let canonical = serde_json::to_string(cfg)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let manifest = Manifest {
        config_hash: format!("{:x}", hasher.finalize()),
        tool_version: env!("CARGO_PKG_VERSION"),
        constants: ManifestConstants {
            d: ws.params.d,
            m: ws.params.m,
            sigma_d: ws.params.sigma_d,
            c_d: ws.params.c_d,
            m_c: ws.m_c,
            c_star: ws.c_star,
        },
        seed: cfg.seed,
    };
    std::fs::write(
        cfg.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

fn build_initial(
    cfg: &ExperimentConfig,
    ws: &Workspace,
    grid: &Arc<RadialGrid>,
) -> Result<RadialProfile> {
    let mass = cfg.mass_ratio * ws.m_c;
    match &cfg.initial {
        InitialCondition::Stationary => {
            let v = stationary_profiles::stationary_profile(
                &ws.params,
                &ws.lane_emden,
                1.0,
                Arc::clone(grid),
            )?;
            Ok(v.scaled(cfg.mass_ratio))
        }
        InitialCondition::SelfSimilar => {
            let w = stationary_profiles::self_similar_profile(&ws.params, mass, ws.m_c, 1e-9)?;
            let inv = ws.params.inv_m_minus_one();
            Ok(RadialProfile::from_radial_fn(Arc::clone(grid), |r| {
                w.theta_at(r).powf(inv)
            }))
        }
        InitialCondition::Gaussian { t0 } => RadialProfile::gaussian(Arc::clone(grid), mass, *t0),
        InitialCondition::Ball { radius } => {
            let volume = grid.sigma_d() / grid.d() as f64 * radius.powi(grid.d() as i32);
            RadialProfile::ball_indicator(Arc::clone(grid), *radius, mass / volume)
        }
        InitialCondition::File { path } => RadialProfile::read_csv(Arc::clone(grid), path),
    }
}

fn run_profile(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ExitStatus> {
    let grid = cfg.grid.build(cfg.dimension)?;
    ws.lane_emden.write_csv(cfg.output_dir.join("zeta.csv"))?;
    ws.lane_emden
        .write_sidecar(cfg.output_dir.join("zeta.json"))?;
    let v = stationary_profiles::stationary_profile(
        &ws.params,
        &ws.lane_emden,
        1.0,
        Arc::clone(&grid),
    )?
    .scaled(cfg.mass_ratio);
    v.write_csv(cfg.output_dir.join("profile.csv"))?;
    let report = EnergyReport::of(&v);
    std::fs::write(
        cfg.output_dir.join("energy_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(ExitStatus::Completed)
}

fn run_self_similar(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ExitStatus> {
    let mass = cfg.mass_ratio * ws.m_c;
    let sol = stationary_profiles::self_similar_profile(&ws.params, mass, ws.m_c, 1e-9)?;
    sol.write_csv(cfg.output_dir.join("xi.csv"))?;
    sol.write_sidecar(cfg.output_dir.join("xi.json"))?;
    let ids = stationary_profiles::self_similar_identities(&ws.params, &sol)?;
    let payload = serde_json::json!({
        "identities": ids,
        "nu_M": sol.rescaled_energy(&ws.params),
        "mass": sol.mass,
        "support_radius": sol.support_radius,
        "central_value": sol.central_value,
    });
    std::fs::write(
        cfg.output_dir.join("identities.json"),
        serde_json::to_string_pretty(&payload)?,
    )?;
    Ok(ExitStatus::Completed)
}

fn run_vhls(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ExitStatus> {
    use rand::{Rng, SeedableRng};
    let grid = cfg.grid.build(cfg.dimension)?;

    // Multi-start: the configured initial plus seeded random profiles; the
    // ratio is scale invariant, so unnormalized starts are fine.
    let mut starts = vec![build_initial(cfg, ws, &grid)?];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..3 {
        let values: Vec<f64> = (0..grid.n_cells())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        starts.push(RadialProfile::new(Arc::clone(&grid), values)?);
    }
    let mut best: Option<vhls_search::AscentOutcome> = None;
    for init in &starts {
        let out = vhls_search::maximize_lambda(init, &AscentConfig::default())?;
        if best.as_ref().is_none_or(|b| out.lambda > b.lambda) {
            best = Some(out);
        }
    }
    let out = best.expect("at least one start");

    vhls_search::write_ascent_log(cfg.output_dir.join("ascent.csv"), &out.trace)?;
    out.profile
        .write_csv(cfg.output_dir.join("maximizer.csv"))?;
    let payload = serde_json::json!({
        "C_star_shooting": ws.c_star,
        "C_star_ascent": out.lambda,
        "relative_gap": (ws.c_star - out.lambda).abs() / ws.c_star,
        "converged": out.converged,
        "iterations": out.trace.len(),
        "starts": starts.len(),
    });
    std::fs::write(
        cfg.output_dir.join("vhls_report.json"),
        serde_json::to_string_pretty(&payload)?,
    )?;
    Ok(ExitStatus::Completed)
}

fn run_evolve(cfg: &ExperimentConfig, ws: &Workspace) -> Result<ExitStatus> {
    let grid = cfg.grid.build(cfg.dimension)?;
    let initial = build_initial(cfg, ws, &grid)?;
    let solver = cfg
        .solver
        .clone()
        .ok_or_else(|| Error::config("evolve requires a solver block"))?;
    let run = evolution::run(initial, &solver)?;

    evolution::write_run_csv(cfg.output_dir.join("run.csv"), &run.records)?;
    for (idx, (t, profile)) in run.snapshots.iter().enumerate() {
        let _ = t;
        profile.write_csv(cfg.output_dir.join(format!("profile_{idx:04}.csv")))?;
    }
    std::fs::write(
        cfg.output_dir.join("blowup.json"),
        serde_json::to_string_pretty(&run.blowup)?,
    )?;

    // Distance to the unit-L^m-norm stationary profile at the blow-up
    // scaling, per snapshot. Exploratory: reported, never asserted.
    let distances = reference_distances(ws, &run.snapshots);
    let summary = diagnostics::summarize(&run.records, &run.blowup, distances);
    diagnostics::write_summary(cfg.output_dir.join("diagnostics_summary.json"), &summary)?;

    let extras = serde_json::json!({
        "steps_taken": run.final_state.steps_taken,
        "clipped_cells": run.clipped_cells,
        "redistributions": run.redistributions,
        "energy_violations": run.energy_violations,
        "energy_increment_sum": run.energy_increment_sum,
        "boundary_mass_fraction": run.boundary_mass_fraction,
        "warnings": run.warnings,
    });
    std::fs::write(
        cfg.output_dir.join("run_stats.json"),
        serde_json::to_string_pretty(&extras)?,
    )?;

    Ok(if run.blowup.detected {
        ExitStatus::BlowupDetected
    } else {
        ExitStatus::Completed
    })
}

fn reference_distances(ws: &Workspace, snapshots: &[(f64, RadialProfile)]) -> Vec<f64> {
    let radius = ws
        .lane_emden
        .lm_norm_m
        .powf(1.0 / (ws.params.d as f64 - 2.0));
    let grid = match RadialGrid::uniform(ws.params.d, 1.5 * radius, 2048) {
        Ok(g) => g.into_shared(),
        Err(_) => return Vec::new(),
    };
    let v_norm =
        match stationary_profiles::stationary_profile(&ws.params, &ws.lane_emden, radius, grid) {
            Ok(v) => v,
            Err(_) => return Vec::new(),
        };
    snapshots
        .iter()
        .filter_map(|(t, p)| {
            let mut state = evolution::EvolutionState::new(p.clone());
            state.time = *t;
            diagnostics::blowup_profile_distance(&state, &v_norm).ok()
        })
        .collect()
}

/// Execute one experiment; artifacts land in `config.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExitStatus> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ws = prepare_workspace(cfg)?;
    write_manifest(cfg, &ws)?;
    match cfg.command {
        CommandKind::Profile => run_profile(cfg, &ws),
        CommandKind::SelfSimilar => run_self_similar(cfg, &ws),
        CommandKind::Vhls => run_vhls(cfg, &ws),
        CommandKind::Evolve => run_evolve(cfg, &ws),
    }
}

/// Run every `*.json` config in a directory on a worker pool; the pool size
/// is capped by the CRITMASS_THREADS environment variable. Config errors
/// dominate the exit status, then blow-ups.
pub fn run_sweep(dir: impl AsRef<Path>) -> Result<ExitStatus> {
    use rayon::prelude::*;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!(
            "no *.json configs under {}",
            dir.as_ref().display()
        )));
    }

    let threads = std::env::var("CRITMASS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
    };

    let results: Vec<Result<ExitStatus>> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| ExperimentConfig::load(p).and_then(|cfg| run_experiment(&cfg)))
            .collect()
    });

    let mut status = ExitStatus::Completed;
    for r in results {
        match r {
            Err(e) => return Err(e),
            Ok(ExitStatus::BlowupDetected) => status = ExitStatus::BlowupDetected,
            Ok(ExitStatus::Completed) => {}
        }
    }
    Ok(status)
}
