//! Mass-conservative explicit finite-volume evolution.
//!
//! Original frame:  du/dt = div( grad f(u) - u grad phi ),
//! rescaled frame:  dr/ds = div( y r + grad f(r) - r grad c ),
//! with f(u) = (u + eps)^m - eps^m (eps = 0 is the degenerate equation) and
//! the potential gradient from the cumulative mass. Interface fluxes combine
//! a centered difference of f(u) with an upwinded drift term
//!
//!   J = -d_r f(u) + u_up v,       v = phi'          (original)
//!                                 v = phi' - r      (rescaled),
//!
//! and the conservative update u_i -= dt/vol_i (A J)|_edges telescopes, so
//! mass is conserved to roundoff. Time steps obey both the diffusive and the
//! drift CFL bound; the step collapsing under blow-up doubles as a detector
//! alongside the sup-norm threshold.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::energetics;
use crate::error::{Error, Result};
use crate::poisson;
use crate::radial_core::{ModelParams, RadialProfile};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Original,
    Rescaled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub frame: Frame,
    /// Regularization parameter in f(u) = (u + eps)^m - eps^m; zero runs the
    /// degenerate equation.
    #[serde(default)]
    pub epsilon: f64,
    /// Courant factor in (0, 1).
    pub cfl: f64,
    pub t_end: f64,
    /// Abort threshold: a stability step below this signals blow-up.
    pub dt_min: f64,
    /// Blow-up flag when the sup norm exceeds this multiple of its initial
    /// value.
    pub linf_blowup_factor: f64,
    /// Diagnostic cadence in time units.
    pub record_every: f64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::config(format!(
                "cfl must lie in (0,1), got {}",
                self.cfl
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::config("epsilon must be >= 0"));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::config("t_end must be positive"));
        }
        if !(self.dt_min > 0.0) {
            return Err(Error::config("dt_min must be positive"));
        }
        if !(self.linf_blowup_factor > 1.0) {
            return Err(Error::config("linf_blowup_factor must exceed 1"));
        }
        if !(self.record_every > 0.0) {
            return Err(Error::config("record_every must be positive"));
        }
        Ok(())
    }

    /// Defaults per the blow-up detection policy: threshold 1e3 on the sup
    /// norm and dt_min = 1e-12 t_end.
    pub fn new(frame: Frame, t_end: f64, record_every: f64) -> SolverConfig {
        SolverConfig {
            frame,
            epsilon: 0.0,
            cfl: 0.9,
            t_end,
            dt_min: 1e-12 * t_end,
            linf_blowup_factor: 1e3,
            record_every,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub time: f64,
    pub profile: RadialProfile,
    pub dt_last: f64,
    pub steps_taken: u64,
}

impl EvolutionState {
    pub fn new(profile: RadialProfile) -> EvolutionState {
        EvolutionState {
            time: 0.0,
            profile,
            dt_last: 0.0,
            steps_taken: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCriterion {
    LinfThreshold,
    DtUnderflow,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub criterion: Option<BlowupCriterion>,
    pub virial_upper_bound: Option<f64>,
    pub lm_at_detect: Option<f64>,
}

impl BlowupReport {
    fn none(virial_upper_bound: Option<f64>) -> BlowupReport {
        BlowupReport {
            detected: false,
            t_detect: None,
            criterion: None,
            virial_upper_bound,
            lm_at_detect: None,
        }
    }
}

/// If the initial free energy is negative, the virial identity
/// d/dt M2 = 2(d-2) F forces M2 to hit zero by
/// t = M2(u0) / (2 (d-2) |F(u0)|); blow-up happens strictly earlier.
pub fn virial_upper_bound(initial: &RadialProfile) -> Option<f64> {
    let f = energetics::free_energy(initial);
    if f < 0.0 {
        let d = initial.grid().d() as f64;
        Some(initial.second_moment() / (2.0 * (d - 2.0) * f.abs()))
    } else {
        None
    }
}

/// f(u) = (u + eps)^m - eps^m with fast paths for the d = 3 and d = 4
/// exponents (m = 4/3 and m = 3/2) that dominate the hot loop.
#[derive(Clone, Copy)]
struct Nonlinearity {
    m: f64,
    epsilon: f64,
    eps_m: f64,
    d: usize,
}

impl Nonlinearity {
    fn new(params: &ModelParams, epsilon: f64) -> Nonlinearity {
        Nonlinearity {
            m: params.m,
            epsilon,
            eps_m: if epsilon > 0.0 {
                epsilon.powf(params.m)
            } else {
                0.0
            },
            d: params.d,
        }
    }

    #[inline]
    fn pow_m(&self, x: f64) -> f64 {
        match self.d {
            3 => x * x.cbrt(),
            4 => x * x.sqrt(),
            _ => x.powf(self.m),
        }
    }

    #[inline]
    fn f(&self, u: f64) -> f64 {
        self.pow_m(u + self.epsilon) - self.eps_m
    }

    /// (u_max + eps)^{m-1}, the diffusivity scale in the CFL bound.
    #[inline]
    fn pow_m1(&self, x: f64) -> f64 {
        match self.d {
            3 => x.cbrt(),
            4 => x.sqrt(),
            _ => x.powf(self.m - 1.0),
        }
    }
}

/// Scratch buffers reused across steps.
struct Stepper {
    params: ModelParams,
    nonlin: Nonlinearity,
    q: Vec<f64>,
    v: Vec<f64>,
    f: Vec<f64>,
    clipped_cells: u64,
    redistributions: u64,
}

impl Stepper {
    fn new(profile: &RadialProfile, cfg: &SolverConfig) -> Result<Stepper> {
        let params = ModelParams::new(profile.grid().d())?;
        let n = profile.grid().n_cells();
        Ok(Stepper {
            nonlin: Nonlinearity::new(&params, cfg.epsilon),
            params,
            q: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            f: vec![0.0; n],
            clipped_cells: 0,
            redistributions: 0,
        })
    }

    /// Fill Q and v = phi' (- r in the rescaled frame) for the current
    /// values; returns the max density for the CFL bound.
    fn prepare(&mut self, profile: &RadialProfile, frame: Frame) -> f64 {
        let grid = profile.grid();
        let values = profile.values();
        let vols = grid.shell_volumes();
        let mut acc = 0.0;
        let mut u_max = 0.0f64;
        self.q[0] = 0.0;
        for i in 0..values.len() {
            acc += values[i] * vols[i];
            self.q[i + 1] = acc;
            u_max = u_max.max(values[i]);
        }
        poisson::fill_gradient(grid, &self.q, &mut self.v);
        if frame == Frame::Rescaled {
            for (vj, &r) in self.v.iter_mut().zip(grid.edges()) {
                *vj -= r;
            }
        }
        u_max
    }

    /// Stability bound dt <= min( dr_min^2 / (2 d m (u_max+eps)^{m-1}),
    /// min_j dr_j / |v_j| ), before the Courant factor.
    fn stability_dt(&self, profile: &RadialProfile, u_max: f64) -> f64 {
        let grid = profile.grid();
        let centers = grid.centers();
        let d = self.params.d as f64;
        let diffusivity = 2.0 * d * self.params.m * self.nonlin.pow_m1(u_max + self.nonlin.epsilon);
        let dr_min = grid.min_cell_width();
        let mut dt = if diffusivity > 0.0 {
            dr_min * dr_min / diffusivity
        } else {
            f64::INFINITY
        };
        for j in 1..centers.len() {
            let speed = self.v[j].abs();
            if speed > 0.0 {
                dt = dt.min((centers[j] - centers[j - 1]) / speed);
            }
        }
        dt
    }

    /// One conservative update with the given dt; `prepare` must have run on
    /// the same values.
    fn advance(&mut self, profile: &mut RadialProfile, dt: f64) {
        let grid = std::sync::Arc::clone(profile.grid());
        let centers = grid.centers();
        let areas = grid.edge_areas();
        let vols = grid.shell_volumes();
        let n = grid.n_cells();
        let values = profile.values_mut();

        // Interface fluxes need the pre-update values; fill f(u) first, then
        // sweep edges left to right carrying A*J of the previous edge (both
        // boundary fluxes vanish). Computing edge i+1 before overwriting
        // cell i keeps every flux evaluated on pre-update data.
        for (fi, &u) in self.f.iter_mut().zip(values.iter()) {
            *fi = self.nonlin.f(u);
        }
        let mut mass = 0.0;
        let mut left_aj = 0.0;
        for i in 0..n {
            let right_aj = if i + 1 < n {
                let j = i + 1;
                let grad_f = (self.f[j] - self.f[i]) / (centers[j] - centers[i]);
                let vj = self.v[j];
                let upwind = if vj > 0.0 { values[i] } else { values[j] };
                (-grad_f + upwind * vj) * areas[j]
            } else {
                0.0
            };
            values[i] -= dt / vols[i] * (right_aj - left_aj);
            left_aj = right_aj;
            mass += values[i] * vols[i];
        }

        // Roundoff negatives near the free boundary: clip, and restore the
        // telescoped mass by proportional redistribution only when the clip
        // is material (a plain clip is drift-free enough below 1e-13 M).
        let mut gained_mass = 0.0;
        let mut clipped = 0u64;
        for (v, vol) in values.iter_mut().zip(vols) {
            if *v < 0.0 {
                gained_mass -= *v * vol;
                *v = 0.0;
                clipped += 1;
            }
        }
        if clipped > 0 {
            self.clipped_cells += clipped;
            let clipped_total = mass + gained_mass;
            if gained_mass > 1e-13 * mass.abs() && clipped_total > 0.0 {
                let scale = mass / clipped_total;
                for v in values.iter_mut() {
                    *v *= scale;
                }
                self.redistributions += 1;
            }
        }
    }
}

/// Stability time step for the current state, capped so the run lands
/// exactly on t_end. A zero (or flat) profile has no diffusive constraint
/// and steps straight to the horizon.
pub fn compute_dt(state: &EvolutionState, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let mut stepper = Stepper::new(&state.profile, cfg)?;
    let u_max = stepper.prepare(&state.profile, cfg.frame);
    let dt = cfg.cfl * stepper.stability_dt(&state.profile, u_max);
    Ok(dt.min((cfg.t_end - state.time).max(0.0)))
}

/// One explicit step at the stability dt.
pub fn step(state: EvolutionState, cfg: &SolverConfig) -> Result<EvolutionState> {
    cfg.validate()?;
    if let Some((index, value)) = state.profile.first_negative() {
        return Err(Error::NegativeDensity { index, value });
    }
    let mut stepper = Stepper::new(&state.profile, cfg)?;
    let mut state = state;
    let u_max = stepper.prepare(&state.profile, cfg.frame);
    let dt = (cfg.cfl * stepper.stability_dt(&state.profile, u_max))
        .min((cfg.t_end - state.time).max(0.0));
    stepper.advance(&mut state.profile, dt);
    state.time += dt;
    state.dt_last = dt;
    state.steps_taken += 1;
    Ok(state)
}

/// Everything a finished run produced.
#[derive(Debug)]
pub struct RunOutput {
    pub final_state: EvolutionState,
    pub records: Vec<DiagnosticsRecord>,
    /// Profile snapshots at the record times.
    pub snapshots: Vec<(f64, RadialProfile)>,
    pub blowup: BlowupReport,
    pub clipped_cells: u64,
    pub redistributions: u64,
    /// Count of record intervals on which the free energy increased beyond
    /// tolerance, and the accumulated positive increments.
    pub energy_violations: usize,
    pub energy_increment_sum: f64,
    /// Q(0.9 R_max) / M at the end of the run (boundary contamination).
    pub boundary_mass_fraction: f64,
    pub warnings: Vec<String>,
}

/// Advance to t_end or to blow-up, recording diagnostics at the configured
/// cadence.
pub fn run(initial: RadialProfile, cfg: &SolverConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some((index, value)) = initial.first_negative() {
        return Err(Error::NegativeDensity { index, value });
    }
    let mass0 = initial.mass();
    if mass0 > 0.0 {
        // Domain truncation check: essentially all mass must sit inside
        // 0.9 R_max at t = 0.
        let q = initial.cumulative_mass();
        let edges = initial.grid().edges();
        let r_cut = 0.9 * initial.grid().r_max();
        let idx = edges.partition_point(|&e| e <= r_cut).saturating_sub(1);
        if q[idx] / mass0 <= 1.0 - 1e-8 {
            return Err(Error::invalid_argument(format!(
                "initial mass within 0.9 R_max is only {:.12} of M; enlarge the domain",
                q[idx] / mass0
            )));
        }
    }

    let mut warnings = Vec::new();
    if cfg.t_end / cfg.record_every < 20.0 {
        warnings.push(format!(
            "only {:.1} records over the run; virial/dissipation convergence checks want >= 20",
            cfg.t_end / cfg.record_every
        ));
    }

    let linf0 = initial.linf();
    let virial_ub = virial_upper_bound(&initial);
    let mut stepper = Stepper::new(&initial, cfg)?;
    let mut state = EvolutionState::new(initial);

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    records.push(diagnostics::record(&state, None)?);
    snapshots.push((0.0, state.profile.clone()));

    let mut blowup = BlowupReport::none(virial_ub);
    let mut next_record = cfg.record_every;
    let mut energy_violations = 0usize;
    let mut energy_increment_sum = 0.0f64;
    let f0 = records[0].free_energy;
    let energy_tol = 1e-8 * (1.0 + f0.abs());

    let mut record_due = false;
    loop {
        if state.time >= cfg.t_end * (1.0 - 1e-15) {
            break;
        }
        let u_max = stepper.prepare(&state.profile, cfg.frame);
        let mut dt = cfg.cfl * stepper.stability_dt(&state.profile, u_max);
        if dt < cfg.dt_min {
            blowup = BlowupReport {
                detected: true,
                t_detect: Some(state.time),
                criterion: Some(BlowupCriterion::DtUnderflow),
                virial_upper_bound: virial_ub,
                lm_at_detect: Some(state.profile.lp_norm(stepper.params.m)?),
            };
            break;
        }
        // Land exactly on the next record tick and on t_end.
        let target = next_record.min(cfg.t_end);
        if state.time + dt >= target - 1e-15 * target.max(1.0) {
            dt = target - state.time;
            record_due = true;
        }
        debug_assert!(
            dt <= stepper.stability_dt(&state.profile, u_max) * (1.0 + 1e-12),
            "cfl violation: dt = {dt}"
        );
        stepper.advance(&mut state.profile, dt);
        state.time += dt;
        state.dt_last = dt;
        state.steps_taken += 1;

        if state.profile.linf() > cfg.linf_blowup_factor * linf0 {
            blowup = BlowupReport {
                detected: true,
                t_detect: Some(state.time),
                criterion: Some(BlowupCriterion::LinfThreshold),
                virial_upper_bound: virial_ub,
                lm_at_detect: Some(state.profile.lp_norm(stepper.params.m)?),
            };
            break;
        }

        if record_due {
            record_due = false;
            let rec = diagnostics::record(&state, records.last())?;
            let df = rec.free_energy - records.last().unwrap().free_energy;
            if df > energy_tol {
                energy_violations += 1;
            }
            if df > 0.0 {
                energy_increment_sum += df;
            }
            records.push(rec);
            snapshots.push((state.time, state.profile.clone()));
            if (state.time - next_record).abs() <= 1e-12 * next_record.max(1.0) {
                next_record += cfg.record_every;
            }
        }
    }

    // Close the series at the stopping time (blow-up or horizon).
    if records.last().map(|r| r.t) != Some(state.time) {
        let rec = diagnostics::record(&state, records.last())?;
        let df = rec.free_energy - records.last().unwrap().free_energy;
        if df > energy_tol {
            energy_violations += 1;
        }
        if df > 0.0 {
            energy_increment_sum += df;
        }
        records.push(rec);
        snapshots.push((state.time, state.profile.clone()));
    }

    let boundary_mass_fraction = {
        let mass = state.profile.mass();
        if mass > 0.0 {
            let q = state.profile.cumulative_mass();
            let edges = state.profile.grid().edges();
            let r_cut = 0.9 * state.profile.grid().r_max();
            let idx = edges.partition_point(|&e| e <= r_cut).saturating_sub(1);
            1.0 - q[idx] / mass
        } else {
            0.0
        }
    };

    Ok(RunOutput {
        final_state: state,
        records,
        snapshots,
        blowup,
        clipped_cells: stepper.clipped_cells,
        redistributions: stepper.redistributions,
        energy_violations,
        energy_increment_sum,
        boundary_mass_fraction,
        warnings,
    })
}

/// Fit the L^m growth-rate constant: the largest observed slope of
/// t -> ||u(t)||_m^{-m/(m-1)} between consecutive records. The norm blow-up
/// envelope uses it in place of the (unknown) analytic constant.
pub fn fit_lm_growth_rate(params: &ModelParams, records: &[DiagnosticsRecord]) -> Option<f64> {
    if records.len() < 2 {
        return None;
    }
    let y = |r: &DiagnosticsRecord| r.lm_norm_m.powf(-1.0 / params.m_minus_one());
    records
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| (y(&w[0]) - y(&w[1])) / (w[1].t - w[0].t))
        .fold(None, |acc: Option<f64>, rate| {
            Some(acc.map_or(rate, |a| a.max(rate)))
        })
}

/// Time-series CSV `run.csv`.
pub fn write_run_csv(path: impl AsRef<Path>, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "t,mass,m2,lm_norm_m,linf,free_energy,rescaled_energy,dissipation,dt"
    )?;
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.mass,
            r.m2,
            r.lm_norm_m,
            r.linf,
            r.free_energy,
            r.rescaled_energy,
            r.dissipation,
            r.dt
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::make_grid;
    use crate::stationary_profiles;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn quick_cfg(t_end: f64) -> SolverConfig {
        SolverConfig::new(Frame::Original, t_end, t_end / 25.0)
    }

    #[test]
    fn zero_profile_is_a_fixed_point() {
        let g = make_grid(3, 2.0, 64).unwrap().into_shared();
        let cfg = quick_cfg(1.0);
        let state = EvolutionState::new(RadialProfile::zeros(g));
        let dt = compute_dt(&state, &cfg).unwrap();
        // No diffusive or drift constraint: straight to the horizon.
        assert_eq!(dt, 1.0);
        let next = step(state, &cfg).unwrap();
        assert!(next.profile.values().iter().all(|&v| v == 0.0));
        assert_eq!(next.time, 1.0);
    }

    #[test]
    fn diffusive_dt_scales_with_cell_width_squared() {
        let cfg = quick_cfg(1e9);
        let mut dts = Vec::new();
        for n in [64usize, 128, 256] {
            let g = make_grid(3, 2.0, n).unwrap().into_shared();
            let p = RadialProfile::gaussian(g, 1.0, 0.25).unwrap();
            dts.push(compute_dt(&EvolutionState::new(p), &cfg).unwrap());
        }
        assert!((dts[0] / dts[1] - 4.0).abs() < 0.2, "{dts:?}");
        assert!((dts[1] / dts[2] - 4.0).abs() < 0.2, "{dts:?}");
    }

    #[test]
    fn diffusive_dt_scales_with_u_max_to_the_minus_third() {
        // d = 3: dt ~ dr^2 (u_max + eps)^{-1/3}. Probe the diffusive branch
        // in isolation on a flat profile (no drift) via the regularization.
        let g = make_grid(3, 1.0, 64).unwrap().into_shared();
        let dt_at = |eps: f64| {
            let mut cfg = quick_cfg(1e9);
            cfg.epsilon = eps;
            let p = RadialProfile::zeros(Arc::clone(&g));
            compute_dt(&EvolutionState::new(p), &cfg).unwrap()
        };
        let (lo, hi) = (dt_at(1e3), dt_at(1e6));
        assert!((lo / hi - 10.0).abs() < 1e-9, "ratio {}", lo / hi);
        // And the dr^2 law at fixed density scale.
        let dt_n = |n: usize| {
            let g = make_grid(3, 1.0, n).unwrap().into_shared();
            let mut cfg = quick_cfg(1e9);
            cfg.epsilon = 1e3;
            compute_dt(&EvolutionState::new(RadialProfile::zeros(g)), &cfg).unwrap()
        };
        assert!((dt_n(64) / dt_n(128) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn steady_profile_barely_moves() {
        let params = crate::radial_core::ModelParams::new(3).unwrap();
        let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9).unwrap();
        let grid = make_grid(3, 1.25, 512).unwrap().into_shared();
        let v = stationary_profiles::stationary_profile(&params, &sol, 1.0, grid).unwrap();
        let m_c = v.mass();
        let cfg = quick_cfg(1.0);
        let mut state = EvolutionState::new(v.clone());
        for _ in 0..100 {
            state = step(state, &cfg).unwrap();
        }
        let drift = state.profile.l1_distance(&v).unwrap();
        println!("steady-state L1 drift over 100 steps: {drift:.3e} (M_c = {m_c:.4})");
        assert!(drift <= 1e-4 * m_c, "drift {drift}");
    }

    #[test]
    fn virial_upper_bound_formula() {
        let params = crate::radial_core::ModelParams::new(3).unwrap();
        let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9).unwrap();
        let grid = make_grid(3, 1.25, 1024).unwrap().into_shared();
        let v =
            stationary_profiles::stationary_profile(&params, &sol, 1.0, Arc::clone(&grid)).unwrap();

        // F >= 0 data has no bound.
        assert!(virial_upper_bound(&v).is_none());
        let sub = v.scaled(0.5);
        assert!(virial_upper_bound(&sub).is_none());

        // u0 = 2 V: F(u0) = 3 (2^{4/3} - 4) ||V||_{4/3}^{4/3} + 4 F(V) as a
        // discrete identity; F(V) itself is zero up to quadrature error.
        let double = v.scaled(2.0);
        let f = crate::energetics::free_energy(&double);
        let f_v = crate::energetics::free_energy(&v);
        let lm = v.lq_norm_pow(params.m);
        let want = 3.0 * (2.0f64.powf(4.0 / 3.0) - 4.0) * lm;
        assert!(
            (f - want - 4.0 * f_v).abs() <= 1e-9 * want.abs(),
            "{f} vs {want} (F(V) = {f_v:.3e})"
        );
        assert!(f_v.abs() <= 1e-5 * want.abs());
        let bound = virial_upper_bound(&double).unwrap();
        let m2 = double.second_moment();
        assert!((bound - m2 / (2.0 * f.abs())).abs() <= 1e-12 * bound);
    }

    #[test]
    fn subcritical_gaussian_run_dissipates() {
        let g = make_grid(3, 6.0, 128).unwrap().into_shared();
        let u0 = RadialProfile::gaussian(g, 100.0, 0.25).unwrap();
        let cfg = quick_cfg(0.05);
        let out = run(u0, &cfg).unwrap();
        assert!(!out.blowup.detected);
        let r0 = &out.records[0];
        let rn = out.records.last().unwrap();
        assert!((rn.mass - r0.mass).abs() <= 1e-12 * r0.mass);
        println!(
            "gaussian run: steps {}, F {} -> {}, violations {}, increments {:.3e}",
            out.final_state.steps_taken,
            r0.free_energy,
            rn.free_energy,
            out.energy_violations,
            out.energy_increment_sum
        );
        assert_eq!(out.energy_violations, 0);
        assert!(rn.free_energy <= r0.free_energy);
        // F > 0 (sub-critical), so the second moment grows.
        assert!(out
            .records
            .windows(2)
            .all(|w| w[1].m2 >= w[0].m2 * (1.0 - 1e-12)));
    }

    #[test]
    fn supercritical_double_stationary_blows_up_before_the_virial_time() {
        let params = crate::radial_core::ModelParams::new(3).unwrap();
        let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9).unwrap();
        let grid = make_grid(3, 1.25, 192).unwrap().into_shared();
        let v = stationary_profiles::stationary_profile(&params, &sol, 1.0, grid).unwrap();
        let u0 = v.scaled(2.0);
        let bound = virial_upper_bound(&u0).unwrap();
        let cfg = SolverConfig::new(Frame::Original, 2.0 * bound, bound / 40.0);
        let out = run(u0, &cfg).unwrap();
        println!(
            "blow-up: detected {} at t = {:?} ({:?}), virial bound {bound:.4e}, steps {}",
            out.blowup.detected,
            out.blowup.t_detect,
            out.blowup.criterion,
            out.final_state.steps_taken
        );
        assert!(out.blowup.detected);
        assert!(out.blowup.t_detect.unwrap() < bound);
        assert!(out.blowup.lm_at_detect.unwrap() > 0.0);
        assert_eq!(out.blowup.virial_upper_bound, Some(bound));
        // The norm history fits a finite positive growth rate.
        let c_hat = fit_lm_growth_rate(&params, &out.records).unwrap();
        assert!(c_hat.is_finite() && c_hat > 0.0);
    }

    #[test]
    fn regularized_runs_approach_the_degenerate_one() {
        let g = make_grid(3, 6.0, 128).unwrap().into_shared();
        let u0 = RadialProfile::gaussian(Arc::clone(&g), 100.0, 0.25).unwrap();
        let t_end = 0.02;
        let solve = |eps: f64| {
            let mut cfg = quick_cfg(t_end);
            cfg.epsilon = eps;
            run(u0.clone(), &cfg).unwrap().final_state.profile
        };
        let reference = solve(0.0);
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let dist = solve(eps).l1_distance(&reference).unwrap();
            println!("eps {eps:.0e}: L1 distance {dist:.3e}");
            assert!(dist < prev, "no decay at eps {eps}");
            prev = dist;
        }
        // Roughly first-order in eps: 100x smaller eps, much smaller gap.
        assert!(prev < 1e-2 * 100.0);
    }

    #[test]
    fn rescaled_frame_dissipates_g() {
        // Start wider than the confined equilibrium so the second moment
        // contracts; the upwind bias is then a small perturbation on a
        // strongly decreasing G.
        let g = make_grid(3, 12.0, 256).unwrap().into_shared();
        let u0 = RadialProfile::gaussian(g, 100.0, 1.0).unwrap();
        let cfg = SolverConfig::new(Frame::Rescaled, 1.0, 0.04);
        let out = run(u0, &cfg).unwrap();
        assert!(!out.blowup.detected);
        let g0 = out.records[0].rescaled_energy;
        let tol = 1e-8 * (1.0 + g0.abs());
        for w in out.records.windows(2) {
            assert!(
                w[1].rescaled_energy <= w[0].rescaled_energy + tol,
                "G increased: {} -> {}",
                w[0].rescaled_energy,
                w[1].rescaled_energy
            );
        }
        println!(
            "rescaled run: G {g0:.6} -> {:.6}",
            out.records.last().unwrap().rescaled_energy
        );
    }

    #[test]
    fn lm_growth_envelope_holds_for_all_record_pairs() {
        let params = crate::radial_core::ModelParams::new(3).unwrap();
        let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9).unwrap();
        let grid = make_grid(3, 1.25, 128).unwrap().into_shared();
        let v = stationary_profiles::stationary_profile(&params, &sol, 1.0, grid).unwrap();
        let u0 = v.scaled(2.0);
        let bound = virial_upper_bound(&u0).unwrap();
        let cfg = SolverConfig::new(Frame::Original, 2.0 * bound, bound / 30.0);
        let out = run(u0, &cfg).unwrap();
        let c_hat = fit_lm_growth_rate(&params, &out.records).unwrap();
        let y = |r: &crate::diagnostics::DiagnosticsRecord| {
            r.lm_norm_m.powf(-1.0 / params.m_minus_one())
        };
        for i in 0..out.records.len() {
            for j in (i + 1)..out.records.len() {
                let (a, b) = (&out.records[i], &out.records[j]);
                let envelope = y(a) - c_hat * (b.t - a.t);
                assert!(
                    y(b) >= envelope - 1e-12 * y(a).abs(),
                    "envelope violated between records {i} and {j}"
                );
            }
        }
    }

    #[test]
    fn run_rejects_mass_near_the_boundary() {
        let g = make_grid(3, 1.0, 64).unwrap().into_shared();
        // Annulus hugging the outer boundary.
        let p = RadialProfile::from_radial_fn(g, |r| if r > 0.95 { 1.0 } else { 0.0 });
        assert!(matches!(
            run(p, &quick_cfg(1.0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut cfg = quick_cfg(1.0);
        cfg.cfl = 1.5;
        assert!(cfg.validate().is_err());
        cfg = quick_cfg(1.0);
        cfg.linf_blowup_factor = 0.5;
        assert!(cfg.validate().is_err());
        cfg = quick_cfg(1.0);
        cfg.epsilon = -1.0;
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        // Mass is conserved to roundoff by the telescoping flux update.
        #[test]
        fn prop_step_conserves_mass(values in prop::collection::vec(0.0f64..5.0, 48)) {
            let g = make_grid(3, 2.0, 48).unwrap().into_shared();
            let mut values = values;
            // Keep the initial mass away from the outer boundary.
            for v in values.iter_mut().skip(40) { *v = 0.0; }
            let p = RadialProfile::new(g, values).unwrap();
            let m0 = p.mass();
            prop_assume!(m0 > 1e-6);
            let cfg = quick_cfg(1.0);
            let mut state = EvolutionState::new(p);
            for _ in 0..20 {
                state = step(state, &cfg).unwrap();
            }
            prop_assert!((state.profile.mass() - m0).abs() <= 1e-13 * m0 * 20.0);
            prop_assert!(state.profile.is_non_negative());
        }
    }
}
