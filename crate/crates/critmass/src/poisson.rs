//! Radial Poisson coupling via Newton's theorem.
//!
//! For a radial density u the attractive potential phi = K * u, with
//! K(x) = c_d |x|^{2-d}, reduces to one-dimensional quadratures of the
//! cumulative mass Q(r): the field at radius r depends only on the mass
//! inside r,
//!
//!   phi'(r) = -Q(r) / (sigma_d r^{d-1}),
//!   phi(r)  = c_d [ Q(r)/r^{d-2} + sigma_d int_r^inf s u(s) ds ].
//!
//! Both Q and the tail integral are piecewise polynomials for cell-averaged
//! profiles, so potential values and the interaction functional
//! W(u) = iint u(x) u(y) |x-y|^{2-d} dx dy are evaluated in closed form per
//! cell, exactly (to roundoff) for piecewise-constant data.

use crate::error::{Error, Result};
use crate::radial_core::{RadialGrid, RadialProfile};
use std::sync::Arc;

/// Potential values at cell centers and radial derivative at edges.
#[derive(Debug, Clone)]
pub struct PotentialField {
    grid: Arc<RadialGrid>,
    phi_at_centers: Vec<f64>,
    dphi_at_edges: Vec<f64>,
}

impl PotentialField {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// (K * u) at the cell centers; exact for cell-averaged densities.
    pub fn phi_at_centers(&self) -> &[f64] {
        &self.phi_at_centers
    }

    /// phi' at every edge; identically 0 at the origin by symmetry.
    pub fn dphi_at_edges(&self) -> &[f64] {
        &self.dphi_at_edges
    }
}

fn require_non_negative(p: &RadialProfile) -> Result<()> {
    if let Some((index, value)) = p.first_negative() {
        return Err(Error::NegativeDensity { index, value });
    }
    Ok(())
}

/// Fill `dphi[j] = -Q(r_j) / (sigma_d r_j^{d-1})` at every edge from the
/// cumulative mass; the origin edge is exactly 0. Low-level buffer form so
/// the evolution loop can reuse scratch storage.
pub fn fill_gradient(grid: &RadialGrid, q_at_edges: &[f64], dphi: &mut [f64]) {
    let areas = grid.edge_areas();
    dphi[0] = 0.0;
    for j in 1..q_at_edges.len() {
        dphi[j] = -q_at_edges[j] / areas[j];
    }
}

/// Solve for the potential of a non-negative radial density.
pub fn potential_field(p: &RadialProfile) -> Result<PotentialField> {
    require_non_negative(p)?;
    let grid = Arc::clone(p.grid());
    let d = grid.d();
    let sigma = grid.sigma_d();
    let params = crate::radial_core::ModelParams::new(d)?;
    let edges = grid.edges();
    let values = p.values();
    let n = grid.n_cells();

    let q = p.cumulative_mass();
    let mut dphi = vec![0.0; n + 1];
    fill_gradient(&grid, &q, &mut dphi);

    // Tail integral sigma_d int_r^{R_max} s u(s) ds at every edge.
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let (a, b) = (edges[i], edges[i + 1]);
        tail[i] = tail[i + 1] + values[i] * sigma * (b * b - a * a) / 2.0;
    }

    // phi at the volume centroid of each cell, from the in-cell closed forms
    // Q(r) = Q_a + v sigma (r^d - a^d)/d and T(r) = T_b + v sigma (b^2-r^2)/2.
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (edges[i], edges[i + 1]);
        let c = grid.centers()[i];
        let q_c = q[i] + values[i] * sigma / d as f64 * (c.powi(d as i32) - a.powi(d as i32));
        let t_c = tail[i + 1] + values[i] * sigma * (b * b - c * c) / 2.0;
        phi.push(params.c_d * (q_c / c.powi(d as i32 - 2) + t_c));
    }

    Ok(PotentialField {
        grid,
        phi_at_centers: phi,
        dphi_at_edges: dphi,
    })
}

/// The interaction functional
/// W(u) = 2 sigma_d int_0^inf r Q(r) u(r) dr,
/// evaluated per cell in closed form (Q is a degree-d polynomial within each
/// cell), hence exact for piecewise-constant profiles. Non-negative input is
/// expected; the value is still returned for sign-indefinite data, which the
/// caller should flag.
pub fn interaction_energy(p: &RadialProfile) -> f64 {
    let grid = p.grid();
    let d = grid.d() as f64;
    let di = grid.d() as i32;
    let sigma = grid.sigma_d();
    let edges = grid.edges();
    let values = p.values();
    let q = p.cumulative_mass();
    let mut acc = 0.0;
    for i in 0..grid.n_cells() {
        let (a, b) = (edges[i], edges[i + 1]);
        let v = values[i];
        let quad = b * b - a * a;
        let inner = q[i] * quad / 2.0
            + v * sigma / d
                * ((b.powi(di + 2) - a.powi(di + 2)) / (d + 2.0) - a.powi(di) * quad / 2.0);
        acc += v * inner;
    }
    2.0 * sigma * acc
}

/// int (K * p) q dx / c_d via per-cell exact integration of the potential of
/// `p` against the cell averages of `q`. For p = q this must reproduce
/// `interaction_energy` (the two assemblies differ but both are exact).
pub fn potential_integral(p: &RadialProfile, q_profile: &RadialProfile) -> Result<f64> {
    if p.grid().edges() != q_profile.grid().edges() {
        return Err(Error::invalid_argument(
            "potential_integral requires a common grid",
        ));
    }
    let grid = p.grid();
    let d = grid.d() as f64;
    let di = grid.d() as i32;
    let sigma = grid.sigma_d();
    let edges = grid.edges();
    let pv = p.values();
    let qv = q_profile.values();
    let n = grid.n_cells();

    let qcum = p.cumulative_mass();
    let mut tail = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let (a, b) = (edges[i], edges[i + 1]);
        tail[i] = tail[i + 1] + pv[i] * sigma * (b * b - a * a) / 2.0;
    }

    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (edges[i], edges[i + 1]);
        let v = pv[i];
        let quad = b * b - a * a;
        let dpow = b.powi(di) - a.powi(di);
        let dpow2 = b.powi(di + 2) - a.powi(di + 2);
        // int_a^b r^{d-1} Q(r) r^{2-d} dr
        let near =
            qcum[i] * quad / 2.0 + v * sigma / d * (dpow2 / (d + 2.0) - a.powi(di) * quad / 2.0);
        // int_a^b r^{d-1} T(r) dr
        let far = tail[i + 1] * dpow / d + v * sigma / 2.0 * (b * b * dpow / d - dpow2 / (d + 2.0));
        acc += qv[i] * sigma * (near + far);
    }
    Ok(acc)
}
