//! Maximize the VHLS ratio Lambda over radial profiles by projected
//! gradient ascent with symmetric decreasing rearrangement, starting from a
//! Gaussian, and compare the limit against the Lane-Emden route to C_*.
//!
//!     cargo run --release --example vhls_ascent

use critmass::radial_core::{make_grid, ModelParams, RadialProfile};
use critmass::stationary_profiles::{estimate_cstar, lane_emden_unit_ball};
use critmass::vhls_search::{maximize_lambda, AscentConfig};
use std::sync::Arc;

fn main() -> critmass::Result<()> {
    let params = ModelParams::new(3)?;
    let sol = lane_emden_unit_ball(&params, 1e-9)?;
    let fine = make_grid(3, 1.0, 8192)?.into_shared();
    let shooting = estimate_cstar(&params, &sol, fine)?;

    let grid = make_grid(3, 3.0, 256)?.into_shared();
    let init = RadialProfile::gaussian(Arc::clone(&grid), 1.0, 0.1)?;
    let out = maximize_lambda(&init, &AscentConfig::default())?;

    println!("iter   lambda             step      |proj grad|");
    let stride = (out.trace.len() / 12).max(1);
    for (k, it) in out.trace.iter().enumerate().step_by(stride) {
        let tag = if k + 1 == out.trace.len() {
            "   (final)"
        } else {
            ""
        };
        println!(
            "{:4}   {:.12}   {:.2e}  {:.2e}{tag}",
            it.iter, it.lambda, it.step, it.grad_norm
        );
    }
    println!("converged        = {}", out.converged);
    println!("C_* by ascent    = {:.10}", out.lambda);
    println!("C_* by shooting  = {shooting:.10}");
    println!(
        "relative gap     = {:.3e}",
        (shooting - out.lambda).abs() / shooting
    );
    Ok(())
}
