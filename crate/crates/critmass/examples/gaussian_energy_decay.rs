//! The free energy of the mass-M heat-kernel family decays to zero like
//! t^{-(d-2)/2} for sub-critical masses, which is how mu_M = 0 manifests
//! numerically: the infimum is approached but never attained.
//!
//!     cargo run --release --example gaussian_energy_decay

use critmass::energetics::gaussian_energy_curve;
use critmass::radial_core::ModelParams;

fn main() -> critmass::Result<()> {
    let params = ModelParams::new(3)?;
    let mass = 100.0; // below M_c ~ 202.9
    let t_list = [1.0, 10.0, 100.0, 1000.0, 1e4, 1e5, 1e6];
    let f = gaussian_energy_curve(&params, mass, &t_list)?;

    println!("t          F[h_t]        local log-log slope");
    for (k, (&t, &val)) in t_list.iter().zip(&f).enumerate() {
        if k == 0 {
            println!("{t:8.0}  {val:.6e}");
        } else {
            let slope = (val / f[k - 1]).ln() / (t / t_list[k - 1]).ln();
            println!("{t:8.0}  {val:.6e}   {slope:+.6}");
        }
    }
    println!("expected slope: -(d-2)/2 = -0.5 in d = 3");
    println!("F(1e6)/F(1) = {:.6e}", f.last().unwrap() / f[0]);
    Ok(())
}
