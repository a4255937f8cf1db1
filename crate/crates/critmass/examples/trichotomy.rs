//! The critical-mass trichotomy at desk scale: short runs at mass ratios
//! 0.9, 1.0 and 2.0 with a one-line verdict per run.
//!
//!     cargo run --release --example trichotomy

use critmass::evolution::{run, virial_upper_bound, Frame, SolverConfig};
use critmass::radial_core::{make_grid, ModelParams, RadialProfile};
use critmass::stationary_profiles::{lane_emden_unit_ball, stationary_profile};
use std::f64::consts::PI;

fn main() -> critmass::Result<()> {
    let params = ModelParams::new(3)?;
    let sol = lane_emden_unit_ball(&params, 1e-9)?;
    let m_c = sol.mass;
    println!("M_c = {m_c:.4}");

    // Sub-critical: 0.9 V stays bounded.
    {
        let grid = make_grid(3, 4.0, 384)?.into_shared();
        let v = stationary_profile(&params, &sol, 1.0, grid)?;
        let u0 = v.scaled(0.9);
        let cfg = SolverConfig::new(Frame::Original, 1.0, 0.05);
        let out = run(u0, &cfg)?;
        let linf_max = out.records.iter().map(|r| r.linf).fold(0.0f64, f64::max);
        println!(
            "M = 0.9 M_c : global, sup|u| stayed at {:.0} (blow-up flag: {})",
            linf_max, out.blowup.detected
        );
    }

    // Critical: a flat ball of mass M_c evolves with non-decreasing M2.
    {
        let grid = make_grid(3, 3.0, 256)?.into_shared();
        let u0 = RadialProfile::ball_indicator(grid, 1.0, m_c / (4.0 * PI / 3.0))?;
        let cfg = SolverConfig::new(Frame::Original, 1.0, 0.05);
        let out = run(u0, &cfg)?;
        println!(
            "M = 1.0 M_c : global here, M2 {:.2} -> {:.2}, F {:.3} -> {:.3}",
            out.records[0].m2,
            out.records.last().unwrap().m2,
            out.records[0].free_energy,
            out.records.last().unwrap().free_energy
        );
    }

    // Super-critical: 2 V has F < 0 and collapses in finite time.
    {
        let grid = make_grid(3, 1.25, 384)?.into_shared();
        let v = stationary_profile(&params, &sol, 1.0, grid)?;
        let u0 = v.scaled(2.0);
        let bound = virial_upper_bound(&u0).expect("F < 0");
        let cfg = SolverConfig::new(Frame::Original, 2.0 * bound, bound / 40.0);
        let out = run(u0, &cfg)?;
        println!(
            "M = 2.0 M_c : blow-up at t = {:.4e} (virial bound {:.4e})",
            out.blowup.t_detect.unwrap_or(f64::NAN),
            bound
        );
    }
    Ok(())
}
