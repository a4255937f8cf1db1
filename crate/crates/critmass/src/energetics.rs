//! The free-energy functionals and the constants they pin down.
//!
//! F[u] = ||u||_m^m / (m-1) - (c_d/2) W(u) is the Lyapunov functional of the
//! dynamics; G[u] = F[u] + M2[u]/2 is its analogue in self-similar variables.
//! The VHLS ratio Lambda(u) = W(u) / (||u||_1^{2/d} ||u||_m^m) is invariant
//! under both dilation and amplitude scaling, its supremum C_* defines the
//! critical mass M_c = [2 / ((m-1) C_* c_d)]^{d/2}, and the two-sided L^m
//! bound sandwiches F between multiples of ||u||_m^m with mass-dependent
//! prefactors.

use crate::error::{Error, Result};
use crate::poisson;
use crate::radial_core::{ModelParams, RadialGrid, RadialProfile};
use serde::{Deserialize, Serialize};

/// Flat summary of every functional evaluated on one profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub mass: f64,
    /// ||h||_m^m (not the norm itself).
    pub lm_norm_m: f64,
    pub second_moment: f64,
    /// W(h), the interaction functional.
    pub interaction: f64,
    pub free_energy: f64,
    pub rescaled_energy: f64,
    /// Lambda(h); None when mass or the L^m norm vanishes.
    pub vhls_ratio: Option<f64>,
}

impl EnergyReport {
    pub fn of(p: &RadialProfile) -> EnergyReport {
        let params = params_of(p);
        let mass = p.mass();
        let lm_norm_m = p.lq_norm_pow(params.m);
        let second_moment = p.second_moment();
        let interaction = poisson::interaction_energy(p);
        let free_energy = lm_norm_m / params.m_minus_one() - params.c_d / 2.0 * interaction;
        let vhls_ratio = if mass > 0.0 && lm_norm_m > 0.0 {
            Some(interaction / (mass.powf(2.0 / params.d as f64) * lm_norm_m))
        } else {
            None
        };
        EnergyReport {
            mass,
            lm_norm_m,
            second_moment,
            interaction,
            free_energy,
            rescaled_energy: free_energy + second_moment / 2.0,
            vhls_ratio,
        }
    }
}

fn params_of(p: &RadialProfile) -> ModelParams {
    // Grid construction already validated d >= 3.
    ModelParams::new(p.grid().d()).expect("grid dimension is valid")
}

/// F[u] = ||u||_m^m/(m-1) - (c_d/2) W(u).
pub fn free_energy(p: &RadialProfile) -> f64 {
    let params = params_of(p);
    p.lq_norm_pow(params.m) / params.m_minus_one()
        - params.c_d / 2.0 * poisson::interaction_energy(p)
}

/// G[u] = F[u] + M2[u]/2.
pub fn rescaled_energy(p: &RadialProfile) -> f64 {
    free_energy(p) + p.second_moment() / 2.0
}

/// Lambda(u) = W(u) / (mass^{2/d} ||u||_m^m); invariant under dilation and
/// amplitude scaling.
pub fn vhls_ratio(p: &RadialProfile) -> Result<f64> {
    let params = params_of(p);
    let mass = p.mass();
    let lm = p.lq_norm_pow(params.m);
    if !(mass > 0.0) || !(lm > 0.0) {
        return Err(Error::DegenerateProfile(format!(
            "VHLS ratio undefined: mass = {mass}, ||u||_m^m = {lm}"
        )));
    }
    Ok(poisson::interaction_energy(p) / (mass.powf(2.0 / params.d as f64) * lm))
}

/// M_c = [2 / ((m-1) C_* c_d)]^{d/2}.
pub fn critical_mass(params: &ModelParams, c_star: f64) -> Result<f64> {
    if !(c_star > 0.0) {
        return Err(Error::invalid_argument(format!(
            "C_* must be positive, got {c_star}"
        )));
    }
    Ok((2.0 / (params.m_minus_one() * c_star * params.c_d)).powf(params.d as f64 / 2.0))
}

/// Slack in the two-sided L^m bound:
/// lower = F - (C_* c_d / 2)(M_c^{2/d} - M^{2/d}) ||u||_m^m,
/// upper = (C_* c_d / 2)(M_c^{2/d} + M^{2/d}) ||u||_m^m - F.
/// Both are non-negative up to quadrature error for non-negative profiles.
pub fn lm_bound_gap(p: &RadialProfile, c_star: f64, m_c: f64) -> (f64, f64) {
    let params = params_of(p);
    let two_over_d = 2.0 / params.d as f64;
    let f = free_energy(p);
    let lm = p.lq_norm_pow(params.m);
    let mass = p.mass();
    let k = c_star * params.c_d / 2.0;
    let lower = f - k * (m_c.powf(two_over_d) - mass.powf(two_over_d)) * lm;
    let upper = k * (m_c.powf(two_over_d) + mass.powf(two_over_d)) * lm - f;
    (lower, upper)
}

/// Discrete free-energy dissipation
/// int |(2m/(2m-1)) d_r u^{(2m-1)/2} - u^{1/2} phi'|^2 dV,
/// with centered differences of u^{(2m-1)/2} across interior edges and the
/// origin edge excluded by symmetry. Steady profiles register ~0 because the
/// same interface geometry is used by the evolution flux.
pub fn dissipation(p: &RadialProfile) -> Result<f64> {
    let params = params_of(p);
    let field = poisson::potential_field(p)?;
    let grid = p.grid();
    let centers = grid.centers();
    let areas = grid.edge_areas();
    let values = p.values();
    let n = grid.n_cells();

    let exponent = (2.0 * params.m - 1.0) / 2.0;
    let front = 2.0 * params.m / (2.0 * params.m - 1.0);
    let w: Vec<f64> = values.iter().map(|&u| u.powf(exponent)).collect();
    let dphi = field.dphi_at_edges();

    let mut acc = 0.0;
    for j in 1..n {
        let dr = centers[j] - centers[j - 1];
        let grad_w = (w[j] - w[j - 1]) / dr;
        let u_edge = 0.5 * (values[j] + values[j - 1]);
        let g = front * grad_w - u_edge.sqrt() * dphi[j];
        acc += g * g * areas[j] * dr;
    }
    Ok(acc)
}

/// Free energy of the mass-M heat-kernel family
/// h(t, x) = M (4 pi t)^{-d/2} exp(-|x|^2 / 4t)
/// at each requested spread t, on a fresh grid wide enough that the
/// truncated tail mass stays below 1e-10 M. For M <= M_c the values decay
/// to zero like t^{-(d-2)/2}.
pub fn gaussian_energy_curve(params: &ModelParams, mass: f64, t_list: &[f64]) -> Result<Vec<f64>> {
    if !(mass > 0.0) {
        return Err(Error::invalid_argument("mass must be positive"));
    }
    if t_list.is_empty() || t_list.windows(2).any(|w| w[1] <= w[0]) || !(t_list[0] > 0.0) {
        return Err(Error::invalid_argument(
            "t_list must be positive and strictly increasing",
        ));
    }
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let r_max = 12.0 * t.sqrt();
        let grid = RadialGrid::uniform(params.d, r_max, 1024)?.into_shared();
        let h = RadialProfile::gaussian(grid, mass, t)?;
        out.push(free_energy(&h));
    }
    Ok(out)
}
