//! The blow-up zoom monitor: rescale a state by lambda = ||u||_m^{-m/(d-2)}
//! and measure its L1 distance to the unit-L^m-norm stationary profile.
//! Dilated copies of the profile sit at distance ~0 at every zoom level;
//! a genuinely different shape stays far away.
//!
//!     cargo run --release --example blowup_zoom_distance

use critmass::diagnostics::blowup_profile_distance;
use critmass::evolution::EvolutionState;
use critmass::radial_core::{make_grid, ModelParams, RadialProfile};
use critmass::stationary_profiles::{lane_emden_unit_ball, stationary_profile};
use std::sync::Arc;

fn main() -> critmass::Result<()> {
    let params = ModelParams::new(3)?;
    let sol = lane_emden_unit_ball(&params, 1e-9)?;

    // Reference: the minimiser normalized to unit L^m norm.
    let g1 = make_grid(3, 1.0, 2048)?.into_shared();
    let v1 = stationary_profile(&params, &sol, 1.0, g1)?;
    let r_norm = v1
        .lp_norm(params.m)?
        .powf(params.m / (params.d as f64 - 2.0));
    let gv = make_grid(3, 1.25 * r_norm, 2048)?.into_shared();
    let v = stationary_profile(&params, &sol, r_norm, Arc::clone(&gv))?;
    println!(
        "unit-norm dilation radius R = {r_norm:.6}, M_c = {:.4}",
        sol.mass
    );

    println!("zoom mu   L1 distance to V (per unit M_c)");
    for mu in [1.0, 2.0, 4.0, 8.0] {
        let gsrc = make_grid(3, 1.25 * r_norm / mu, 2048)?.into_shared();
        let inv = params.inv_m_minus_one();
        let copy = RadialProfile::from_radial_fn(Arc::clone(&gsrc), |r| {
            mu.powi(3) * sol.theta_at(mu * r / r_norm).powf(inv) / r_norm.powi(3)
        });
        let d = blowup_profile_distance(&EvolutionState::new(copy), &v)?;
        println!("{mu:7.1}   {:.3e}", d / sol.mass);
    }

    let other = RadialProfile::gaussian(Arc::clone(&gv), sol.mass, 0.2)?;
    let far = blowup_profile_distance(&EvolutionState::new(other), &v)?;
    println!(
        "gaussian  {:.3e}  (stays far from the minimiser)",
        far / sol.mass
    );
    Ok(())
}
