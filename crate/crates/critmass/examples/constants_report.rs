//! Dimension-dependent constants with both routes to the sharp VHLS
//! constant: Lane-Emden shooting and projected gradient ascent.
//!
//!     cargo run --release --example constants_report [dimension]

fn main() -> critmass::Result<()> {
    let dimension: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("dimension must be an integer"))
        .unwrap_or(3);
    let report = critmass::cli::constants_report(dimension)?;
    println!("d                = {}", report.d);
    println!("m = 2(d-1)/d     = {:.15}", report.m);
    println!("sigma_d          = {:.15}", report.sigma_d);
    println!("c_d              = {:.15}", report.c_d);
    println!("zeta(0), unit R  = {:.12}", report.zeta0_unit_ball);
    println!("M_c              = {:.12}", report.m_c);
    println!("C_* (shooting)   = {:.12}", report.c_star_shooting);
    println!("C_* (ascent)     = {:.12}", report.c_star_ascent);
    println!("relative gap     = {:.3e}", report.relative_gap);
    Ok(())
}
