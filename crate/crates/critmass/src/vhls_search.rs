//! Independent maximization of the VHLS ratio over radial profiles.
//!
//! Projected gradient ascent on Lambda(p) = W(p) / (M^{2/d} ||p||_m^m): the
//! first-variation direction is followed, negatives are clipped, the iterate
//! is replaced by its symmetric decreasing rearrangement (which can only
//! increase W while preserving every norm), and the two-parameter scale
//! invariance of Lambda is used to re-pin mass and L^m norm after each step.
//! Backtracking keeps the accepted Lambda sequence non-decreasing. The
//! converged value is a second estimate of C_* that never touches the
//! Lane-Emden route.

use crate::energetics;
use crate::error::{Error, Result};
use crate::poisson;
use crate::radial_core::{ModelParams, RadialGrid, RadialProfile};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AscentConfig {
    pub max_iters: usize,
    /// Initial relative step size (the direction is normalized to the
    /// iterate's sup norm).
    pub step0: f64,
    /// Stationarity tolerance on the projected-gradient norm.
    pub tol_grad: f64,
    /// Relative change tolerance on Lambda.
    pub tol_value: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            max_iters: 400,
            step0: 0.5,
            tol_grad: 1e-10,
            tol_value: 1e-10,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            || !(self.step0 > 0.0)
            || !(self.tol_grad > 0.0)
            || !(self.tol_value > 0.0)
        {
            return Err(Error::config("ascent config fields must all be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AscentIteration {
    pub iter: usize,
    pub lambda: f64,
    pub step: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub profile: RadialProfile,
    pub lambda: f64,
    pub trace: Vec<AscentIteration>,
    /// False when max_iters was exhausted before the tolerances fired; a
    /// flag rather than an error.
    pub converged: bool,
}

/// Volume-weighted symmetric decreasing rearrangement: the multiset of
/// (value, shell volume) pairs is kept, values are laid out in non-increasing
/// order from the origin, and the output grid's edges are rebuilt from the
/// cumulative volumes. Mass and every L^q norm are preserved to roundoff,
/// and W (hence Lambda) can only increase.
pub fn symmetric_decreasing_projection(p: &RadialProfile) -> Result<RadialProfile> {
    if let Some((index, value)) = p.first_negative() {
        return Err(Error::NegativeDensity { index, value });
    }
    let grid = p.grid();
    let d = grid.d();
    let sigma = grid.sigma_d();
    let mut pairs: Vec<(f64, f64)> = p
        .values()
        .iter()
        .copied()
        .zip(grid.shell_volumes().iter().copied())
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut edges = Vec::with_capacity(pairs.len() + 1);
    edges.push(0.0);
    let mut cum = 0.0;
    for &(_, vol) in &pairs {
        cum += vol;
        edges.push((d as f64 * cum / sigma).powf(1.0 / d as f64));
    }
    let rearranged = RadialGrid::from_edges(d, edges)?.into_shared();
    RadialProfile::new(rearranged, pairs.into_iter().map(|(v, _)| v).collect())
}

/// First-variation direction of Lambda at p (zero-mass-safe only for valid
/// iterates): (2/c_d) K*p / (M^{2/d} N) - Lambda 2/(d M) on the support
/// - Lambda m p^{m-1} / N, with N = ||p||_m^m.
fn ascent_direction(params: &ModelParams, p: &RadialProfile, lambda: f64) -> Result<Vec<f64>> {
    let field = poisson::potential_field(p)?;
    let mass = p.mass();
    let n_m = p.lq_norm_pow(params.m);
    let m_pow = mass.powf(2.0 / params.d as f64);
    let mass_term = lambda * 2.0 / (params.d as f64 * mass);
    Ok(p.values()
        .iter()
        .zip(field.phi_at_centers())
        .map(|(&u, &phi)| {
            let supp = if u > 0.0 { mass_term } else { 0.0 };
            2.0 / params.c_d * phi / (m_pow * n_m)
                - supp
                - lambda * params.m * u.powf(params.m - 1.0) / n_m
        })
        .collect())
}

/// Projected gradient ascent on Lambda from a non-negative initial profile.
pub fn maximize_lambda(init: &RadialProfile, cfg: &AscentConfig) -> Result<AscentOutcome> {
    cfg.validate()?;
    if let Some((index, value)) = init.first_negative() {
        return Err(Error::NegativeDensity { index, value });
    }
    let params = ModelParams::new(init.grid().d())?;
    let mass_target = init.mass();
    let lm_target = init.lq_norm_pow(params.m);
    if !(mass_target > 0.0) || !(lm_target > 0.0) {
        return Err(Error::DegenerateProfile(
            "ascent needs positive mass and L^m norm".to_string(),
        ));
    }
    let home = Arc::clone(init.grid());

    // Re-pin mass and ||.||_m using the amplitude/dilation invariances of
    // Lambda, then return to the home grid by conservative resampling.
    let renormalize = |p: &RadialProfile| -> Result<RadialProfile> {
        let c = mass_target / p.mass();
        let scaled = p.scaled(c);
        let n_now = scaled.lq_norm_pow(params.m);
        let dilation = (lm_target / n_now).powf(1.0 / (params.d as f64 - 2.0));
        scaled.rescale(dilation)?.resample(Arc::clone(&home))
    };

    let mut p = symmetric_decreasing_projection(init)?.resample(Arc::clone(&home))?;
    p = renormalize(&p)?;
    let mut lambda = energetics::vhls_ratio(&p)?;
    let mut step = cfg.step0;
    let mut trace = Vec::new();
    let mut converged = false;

    for iter in 0..cfg.max_iters {
        let mut dir = ascent_direction(&params, &p, lambda)?;
        // Projected gradient: directions that push an empty cell negative
        // do not count toward stationarity.
        let grad_norm = {
            let mut acc = 0.0;
            for ((g, &u), vol) in dir.iter().zip(p.values()).zip(p.grid().shell_volumes()) {
                let eff = if u <= 0.0 && *g < 0.0 { 0.0 } else { *g };
                acc += eff * eff * vol;
            }
            acc.sqrt()
        };
        trace.push(AscentIteration {
            iter,
            lambda,
            step,
            grad_norm,
        });
        if grad_norm <= cfg.tol_grad {
            converged = true;
            break;
        }

        // Normalize the direction to the iterate's amplitude.
        let dir_max = dir.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if dir_max == 0.0 {
            converged = true;
            break;
        }
        let amp = p.linf() / dir_max;
        for g in dir.iter_mut() {
            *g *= amp;
        }

        // Backtracking: halve until Lambda does not decrease.
        let mut accepted = false;
        while step * dir_max.max(1.0) > 1e-14 {
            let candidate: Vec<f64> = p
                .values()
                .iter()
                .zip(&dir)
                .map(|(&u, &g)| (u + step * g).max(0.0))
                .collect();
            if candidate.iter().all(|&v| v == 0.0) {
                step *= 0.5;
                continue;
            }
            let candidate = RadialProfile::new(Arc::clone(p.grid()), candidate)?;
            let rearranged = symmetric_decreasing_projection(&candidate)?;
            let next = renormalize(&rearranged)?;
            let lambda_next = energetics::vhls_ratio(&next)?;
            if lambda_next >= lambda {
                let improved = lambda_next - lambda;
                p = next;
                lambda = lambda_next;
                accepted = true;
                step = (step * 1.5).min(cfg.step0);
                if improved <= cfg.tol_value * lambda.abs() {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = converged || !accepted;
            break;
        }
    }

    Ok(AscentOutcome {
        profile: p,
        lambda,
        trace,
        converged,
    })
}

/// Iteration log CSV `iter,lambda,step,grad_norm`.
pub fn write_ascent_log(path: impl AsRef<Path>, trace: &[AscentIteration]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "iter,lambda,step,grad_norm")?;
    for it in trace {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            it.iter, it.lambda, it.step, it.grad_norm
        )?;
    }
    Ok(())
}
