//! Radial grids, cell-averaged profiles, and exact shell quadrature.
//!
//! Everything downstream measures densities through this module: a profile is
//! a vector of cell averages (mass per d-volume) on a radial finite-volume
//! grid, and mass / L^q norms / second moments are computed from closed-form
//! shell integrals so that they are exact (to roundoff) for
//! piecewise-constant-in-cell data.

use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

/// Dimension-derived model constants.
///
/// The diffusion exponent `m = 2(d-1)/d` is the one for which diffusion and
/// the attractive Poisson coupling scale identically, so the dynamics is
/// decided by mass alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Spatial dimension, d >= 3.
    pub d: usize,
    /// Critical diffusion exponent m = 2(d-1)/d in (1, 2).
    pub m: f64,
    /// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
    pub sigma_d: f64,
    /// Poisson kernel constant 1 / ((d-2) sigma_d).
    pub c_d: f64,
}

impl ModelParams {
    pub fn new(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::invalid_argument(format!(
                "dimension must be >= 3, got {d}"
            )));
        }
        let sigma_d = 2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d);
        Ok(ModelParams {
            d,
            m: 2.0 * (d as f64 - 1.0) / d as f64,
            sigma_d,
            c_d: 1.0 / ((d as f64 - 2.0) * sigma_d),
        })
    }

    /// m - 1 = (d-2)/d, evaluated without cancellation.
    pub fn m_minus_one(&self) -> f64 {
        (self.d as f64 - 2.0) / self.d as f64
    }

    /// 1/(m-1) = d/(d-2), the exponent mapping the pressure variable
    /// theta = u^{m-1} back to the density.
    pub fn inv_m_minus_one(&self) -> f64 {
        self.d as f64 / (self.d as f64 - 2.0)
    }
}

/// Gamma(n/2) for integer n >= 1, by the recurrence Gamma(x+1) = x Gamma(x)
/// starting from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi).
fn gamma_half(n: usize) -> f64 {
    let mut x = if n.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut k = if n.is_multiple_of(2) { 2 } else { 1 };
    while k < n {
        x *= k as f64 / 2.0;
        k += 2;
    }
    x
}

/// Raise to an integer power by repeated squaring; grids only ever need r^d.
fn powi(x: f64, n: usize) -> f64 {
    x.powi(n as i32)
}

/// A radial finite-volume grid on [0, R_max].
///
/// `shell_volumes[i]` is the exact d-volume (sigma_d/d)(r_{i+1}^d - r_i^d) of
/// shell i and `centers[i]` its volume centroid ((r_i^d + r_{i+1}^d)/2)^{1/d}.
/// The centroid only affects how analytic initial data is sampled, never the
/// conservation statements.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    d: usize,
    edges: Vec<f64>,
    centers: Vec<f64>,
    shell_volumes: Vec<f64>,
    /// sigma_d r^{d-1} at each edge (zero at the origin).
    edge_areas: Vec<f64>,
    /// Exact integral of r^2 dV over each shell:
    /// sigma_d (r_{i+1}^{d+2} - r_i^{d+2}) / (d+2).
    moment_weights: Vec<f64>,
    sigma_d: f64,
}

impl RadialGrid {
    /// Build a grid from strictly increasing edges starting at 0.
    pub fn from_edges(d: usize, edges: Vec<f64>) -> Result<Self> {
        if d < 3 {
            return Err(Error::invalid_argument(format!(
                "dimension must be >= 3, got {d}"
            )));
        }
        if edges.len() < 2 || edges[0] != 0.0 {
            return Err(Error::invalid_argument(
                "edges must start at 0 and contain at least one cell",
            ));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid_argument("edges must be strictly increasing"));
        }
        let params = ModelParams::new(d)?;
        let sigma_d = params.sigma_d;
        let n = edges.len() - 1;
        let mut centers = Vec::with_capacity(n);
        let mut shell_volumes = Vec::with_capacity(n);
        let mut moment_weights = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (edges[i], edges[i + 1]);
            let (ad, bd) = (powi(a, d), powi(b, d));
            centers.push(((ad + bd) / 2.0).powf(1.0 / d as f64));
            shell_volumes.push(sigma_d / d as f64 * (bd - ad));
            moment_weights.push(sigma_d * (powi(b, d + 2) - powi(a, d + 2)) / (d as f64 + 2.0));
        }
        let edge_areas = edges.iter().map(|&r| sigma_d * powi(r, d - 1)).collect();
        Ok(RadialGrid {
            d,
            edges,
            centers,
            shell_volumes,
            edge_areas,
            moment_weights,
            sigma_d,
        })
    }

    /// Uniform grid with spacing R_max / n_cells.
    pub fn uniform(d: usize, r_max: f64, n_cells: usize) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::invalid_argument(format!(
                "R_max must be positive, got {r_max}"
            )));
        }
        if n_cells < 8 {
            return Err(Error::invalid_argument(format!(
                "need at least 8 cells, got {n_cells}"
            )));
        }
        let edges = (0..=n_cells)
            .map(|i| r_max * i as f64 / n_cells as f64)
            .collect();
        Self::from_edges(d, edges)
    }

    /// Geometrically stretched grid: cell widths grow by `growth` per cell,
    /// so resolution concentrates at the origin. Intended for blow-up runs.
    pub fn stretched(d: usize, r_max: f64, n_cells: usize, growth: f64) -> Result<Self> {
        if !(r_max > 0.0) || n_cells < 8 {
            return Err(Error::invalid_argument(
                "stretched grid needs R_max > 0 and n_cells >= 8",
            ));
        }
        if !(growth >= 1.0) || growth > 1.2 {
            return Err(Error::invalid_argument(format!(
                "growth factor must lie in [1, 1.2], got {growth}"
            )));
        }
        // First width h0 from the geometric sum h0 (g^n - 1)/(g - 1) = R_max.
        let g = growth;
        let h0 = if (g - 1.0).abs() < 1e-14 {
            r_max / n_cells as f64
        } else {
            r_max * (g - 1.0) / (powi(g, n_cells) - 1.0)
        };
        let mut edges = Vec::with_capacity(n_cells + 1);
        edges.push(0.0);
        let mut h = h0;
        for i in 0..n_cells {
            let prev = edges[i];
            edges.push(prev + h);
            h *= g;
        }
        // Pin the outer edge exactly.
        *edges.last_mut().unwrap() = r_max;
        Self::from_edges(d, edges)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_cells(&self) -> usize {
        self.centers.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn shell_volumes(&self) -> &[f64] {
        &self.shell_volumes
    }

    pub fn edge_areas(&self) -> &[f64] {
        &self.edge_areas
    }

    pub fn moment_weights(&self) -> &[f64] {
        &self.moment_weights
    }

    pub fn sigma_d(&self) -> f64 {
        self.sigma_d
    }

    /// Volume of the ball of radius R_max.
    pub fn total_volume(&self) -> f64 {
        self.sigma_d / self.d as f64 * powi(self.r_max(), self.d)
    }

    pub fn min_cell_width(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn into_shared(self) -> Arc<RadialGrid> {
        Arc::new(self)
    }
}

/// Free-function form of the uniform grid constructor.
pub fn make_grid(d: usize, r_max: f64, n_cells: usize) -> Result<RadialGrid> {
    RadialGrid::uniform(d, r_max, n_cells)
}

/// 16-point Gauss-Legendre nodes and weights on [-1, 1], computed once by
/// Newton iteration on the Legendre recurrence.
fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static TABLE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    TABLE.get_or_init(|| {
        const N: usize = 16;
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for k in 0..N {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Evaluate P_N and P_N' by the three-term recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=N {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=N {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[k] = x;
            weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// A cell-averaged radial density on a shared grid.
///
/// Values are mass per d-volume. Densities are non-negative; sign-indefinite
/// data is permitted only for functional evaluation and is the caller's
/// responsibility to flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::invalid_argument(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.n_cells()
            )));
        }
        Ok(RadialProfile { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n_cells();
        RadialProfile {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Ingest an analytic radial density by exact cell averaging:
    /// value_i = (1/vol_i) * sigma_d * int_{r_i}^{r_{i+1}} f(r) r^{d-1} dr,
    /// with the integral done by 16-point Gauss-Legendre per cell.
    pub fn from_radial_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let (nodes, weights) = gauss_legendre_16();
        let d = grid.d();
        let mut values = Vec::with_capacity(grid.n_cells());
        for i in 0..grid.n_cells() {
            let (a, b) = (grid.edges[i], grid.edges[i + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = 0.0;
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let r = mid + half * x;
                acc += w * f(r) * powi(r, d - 1);
            }
            values.push(acc * half * grid.sigma_d / grid.shell_volumes[i]);
        }
        RadialProfile { grid, values }
    }

    /// Indicator of the ball of the given radius at the given height, with
    /// exact volume-fraction averages in the cell containing the boundary.
    pub fn ball_indicator(grid: Arc<RadialGrid>, radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid_argument("ball radius must be positive"));
        }
        let d = grid.d();
        let rd = powi(radius, d);
        let mut values = Vec::with_capacity(grid.n_cells());
        for i in 0..grid.n_cells() {
            let (ad, bd) = (powi(grid.edges[i], d), powi(grid.edges[i + 1], d));
            let inside = (rd.min(bd) - ad.min(rd)).max(0.0);
            values.push(height * inside / (bd - ad));
        }
        Ok(RadialProfile { grid, values })
    }

    /// Heat-kernel-shaped bump of the given total mass at spread parameter t:
    /// u(r) = M (4 pi t)^{-d/2} exp(-r^2 / (4 t)).
    pub fn gaussian(grid: Arc<RadialGrid>, mass: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !(mass > 0.0) {
            return Err(Error::invalid_argument(
                "gaussian needs positive mass and spread",
            ));
        }
        let d = grid.d() as f64;
        let amp = mass * (4.0 * std::f64::consts::PI * t).powf(-d / 2.0);
        Ok(Self::from_radial_fn(grid, |r| {
            amp * (-r * r / (4.0 * t)).exp()
        }))
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_non_negative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Index and value of the first negative cell, if any.
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0)
            .map(|(i, &v)| (i, v))
    }

    /// Total mass: sum of value_i * shell_volume_i.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.shell_volumes)
            .map(|(v, vol)| v * vol)
            .sum()
    }

    /// L^q norm, q >= 1; q = infinity returns max |value|.
    pub fn lp_norm(&self, q: f64) -> Result<f64> {
        if q == f64::INFINITY {
            return Ok(self.linf());
        }
        if !(q >= 1.0) {
            return Err(Error::invalid_argument(format!(
                "L^q norms need q >= 1, got {q}"
            )));
        }
        let acc: f64 = self
            .values
            .iter()
            .zip(&self.grid.shell_volumes)
            .map(|(v, vol)| v.abs().powf(q) * vol)
            .sum();
        Ok(acc.powf(1.0 / q))
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Sum of |value_i|^q * vol_i without the final root; the free energy
    /// consumes the norm in this form.
    pub fn lq_norm_pow(&self, q: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.shell_volumes)
            .map(|(v, vol)| v.abs().powf(q) * vol)
            .sum()
    }

    /// Second moment int |x|^2 |u| dx with exact shell weights.
    pub fn second_moment(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.moment_weights)
            .map(|(v, w)| v.abs() * w)
            .sum()
    }

    /// Cumulative mass Q at every edge; Q(0) = 0, Q(R_max) = mass.
    pub fn cumulative_mass(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.values.len() + 1);
        q.push(0.0);
        let mut acc = 0.0;
        for (v, vol) in self.values.iter().zip(&self.grid.shell_volumes) {
            acc += v * vol;
            q.push(acc);
        }
        q
    }

    /// Dilation h_lambda(x) = lambda^d h(lambda x): values scale by lambda^d
    /// and the grid edges by 1/lambda, so mass is preserved exactly.
    pub fn rescale(&self, lambda: f64) -> Result<RadialProfile> {
        if !(lambda > 0.0) {
            return Err(Error::invalid_argument(format!(
                "dilation factor must be positive, got {lambda}"
            )));
        }
        let scale = powi(lambda, self.grid.d());
        let edges = self.grid.edges.iter().map(|&r| r / lambda).collect();
        let grid = RadialGrid::from_edges(self.grid.d(), edges)?.into_shared();
        let values = self.values.iter().map(|&v| v * scale).collect();
        Ok(RadialProfile { grid, values })
    }

    /// Amplitude scaling c * p on the same grid.
    pub fn scaled(&self, c: f64) -> RadialProfile {
        RadialProfile {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    /// Conservative resampling onto a target grid of the same dimension:
    /// each target cell receives the exact mass that the piecewise-constant
    /// source carries over it. Source mass beyond the target radius is
    /// dropped; mass inside is preserved to roundoff.
    pub fn resample(&self, target: Arc<RadialGrid>) -> Result<RadialProfile> {
        if target.d() != self.grid.d() {
            return Err(Error::invalid_argument(
                "resample requires matching dimensions",
            ));
        }
        let d = self.grid.d();
        let src_edges = &self.grid.edges;
        // Mass of the source inside radius r, exact for cell averages.
        let q = self.cumulative_mass();
        let sigma = self.grid.sigma_d;
        let mass_inside = |r: f64| -> f64 {
            if r <= 0.0 {
                return 0.0;
            }
            if r >= *src_edges.last().unwrap() {
                return *q.last().unwrap();
            }
            let j = match src_edges.binary_search_by(|e| e.partial_cmp(&r).unwrap()) {
                Ok(j) => return q[j],
                Err(j) => j - 1,
            };
            q[j] + self.values[j] * sigma / d as f64 * (powi(r, d) - powi(src_edges[j], d))
        };
        let mut values = Vec::with_capacity(target.n_cells());
        for i in 0..target.n_cells() {
            let (a, b) = (target.edges[i], target.edges[i + 1]);
            values.push((mass_inside(b) - mass_inside(a)) / target.shell_volumes[i]);
        }
        Ok(RadialProfile {
            grid: target,
            values,
        })
    }

    /// Outer edge of the last cell holding a strictly positive value.
    pub fn support_radius(&self) -> f64 {
        for i in (0..self.values.len()).rev() {
            if self.values[i] > 0.0 {
                return self.grid.edges[i + 1];
            }
        }
        0.0
    }

    /// L1 distance between two profiles on the same grid.
    pub fn l1_distance(&self, other: &RadialProfile) -> Result<f64> {
        if self.grid.edges != other.grid.edges || self.grid.d() != other.grid.d() {
            return Err(Error::invalid_argument(
                "L1 distance requires a common grid",
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.grid.shell_volumes)
            .map(|((a, b), vol)| (a - b).abs() * vol)
            .sum())
    }

    /// Snapshot CSV with header `r_center,u`, full double precision.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "r_center,u")?;
        for (r, v) in self.grid.centers.iter().zip(&self.values) {
            writeln!(out, "{r:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Read a snapshot CSV back onto the given grid; the row count must
    /// match the cell count (centers are not re-derived from the file).
    pub fn read_csv(grid: Arc<RadialGrid>, path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (k, line) in file.lines().enumerate() {
            let line = line?;
            if k == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let col = line.split(',').nth(1).ok_or_else(|| {
                Error::invalid_argument(format!("malformed snapshot row {k}: {line}"))
            })?;
            values.push(col.trim().parse::<f64>().map_err(|e| {
                Error::invalid_argument(format!("bad value in snapshot row {k}: {e}"))
            })?);
        }
        RadialProfile::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(d: usize, r_max: f64, n: usize) -> Arc<RadialGrid> {
        make_grid(d, r_max, n).unwrap().into_shared()
    }

    #[test]
    fn model_params_d3() {
        let p = ModelParams::new(3).unwrap();
        assert!((p.m - 4.0 / 3.0).abs() < 1e-15);
        assert!((p.sigma_d - 4.0 * PI).abs() < 1e-12);
        assert!((p.c_d - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((p.m_minus_one() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn model_params_d4_and_d5() {
        let p4 = ModelParams::new(4).unwrap();
        assert!((p4.m - 1.5).abs() < 1e-15);
        assert!((p4.sigma_d - 2.0 * PI * PI).abs() < 1e-12);
        let p5 = ModelParams::new(5).unwrap();
        // sigma_5 = 2 pi^{5/2} / Gamma(5/2), Gamma(5/2) = 3 sqrt(pi)/4.
        assert!((p5.sigma_d - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn model_params_rejects_low_dimension() {
        assert!(ModelParams::new(2).is_err());
    }

    #[test]
    fn make_grid_small_example() {
        let g = make_grid(3, 1.0, 8).unwrap();
        assert_eq!(g.edges()[0], 0.0);
        assert!((g.edges()[4] - 0.5).abs() < 1e-15);
        let total: f64 = g.shell_volumes().iter().sum();
        assert!((total - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn make_grid_volume_sums() {
        // (3, 2.0, 8): total volume (4 pi / 3) * 8
        let g = make_grid(3, 2.0, 8).unwrap();
        let total: f64 = g.shell_volumes().iter().sum();
        assert!((total - 4.0 * PI / 3.0 * 8.0).abs() / total < 1e-14);
        assert!((total - 33.5103).abs() < 1e-3);
    }

    #[test]
    fn make_grid_rejects_bad_args() {
        assert!(make_grid(2, 1.0, 8).is_err());
        assert!(make_grid(3, 1.0, 4).is_err());
        assert!(make_grid(3, -1.0, 16).is_err());
    }

    #[test]
    fn stretched_grid_covers_domain() {
        let g = RadialGrid::stretched(3, 2.0, 64, 1.05).unwrap();
        assert_eq!(g.n_cells(), 64);
        assert!((g.r_max() - 2.0).abs() < 1e-15);
        let total: f64 = g.shell_volumes().iter().sum();
        assert!((total - g.total_volume()).abs() / total < 1e-12);
        // Widths grow monotonically.
        let widths: Vec<f64> = g.edges().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(widths.windows(2).all(|w| w[1] > w[0] * 1.04));
    }

    #[test]
    fn mass_of_ball_indicators() {
        let g = grid(3, 2.0, 1024);
        let zero = RadialProfile::zeros(Arc::clone(&g));
        assert_eq!(zero.mass(), 0.0);
        let ball = RadialProfile::ball_indicator(Arc::clone(&g), 1.0, 1.0).unwrap();
        assert!((ball.mass() - 4.0 * PI / 3.0).abs() / ball.mass() < 1e-13);
        let tall = RadialProfile::ball_indicator(g, 1.0, 2.0).unwrap();
        assert!((tall.mass() - 8.0 * PI / 3.0).abs() / tall.mass() < 1e-13);
    }

    #[test]
    fn lp_norms_of_unit_ball() {
        let g = grid(3, 2.0, 1024);
        let ball = RadialProfile::ball_indicator(Arc::clone(&g), 1.0, 1.0).unwrap();
        // ||1_B||_{4/3} = (4 pi / 3)^{3/4}
        let want = (4.0 * PI / 3.0f64).powf(0.75);
        assert!((ball.lp_norm(4.0 / 3.0).unwrap() - want).abs() / want < 1e-13);
        assert!((ball.lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let zero = RadialProfile::zeros(g);
        assert_eq!(zero.lp_norm(2.0).unwrap(), 0.0);
        assert!(ball.lp_norm(0.5).is_err());
    }

    #[test]
    fn second_moment_closed_forms() {
        let g = grid(3, 4.0, 2048);
        let ball = RadialProfile::ball_indicator(Arc::clone(&g), 1.0, 1.0).unwrap();
        assert!((ball.second_moment() - 4.0 * PI / 5.0).abs() / (4.0 * PI / 5.0) < 1e-12);
        let big = RadialProfile::ball_indicator(Arc::clone(&g), 2.0, 1.0).unwrap();
        let want = 4.0 * PI * 32.0 / 5.0;
        assert!((big.second_moment() - want).abs() / want < 1e-12);
        assert_eq!(RadialProfile::zeros(g).second_moment(), 0.0);
    }

    #[test]
    fn cumulative_mass_telescopes() {
        let g = grid(3, 2.0, 512);
        let ball = RadialProfile::ball_indicator(Arc::clone(&g), 1.0, 1.0).unwrap();
        let q = ball.cumulative_mass();
        assert_eq!(q[0], 0.0);
        // Q at the edge closest to r = 0.5 (edge index 128 of 512 on [0,2]).
        let want = PI / 6.0;
        assert!((q[128] - want).abs() / want < 1e-13);
        let m = ball.mass();
        assert!((q.last().unwrap() - m).abs() <= 1e-13 * m);
        assert!(q.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rescale_preserves_mass_and_scales_lm() {
        let g = grid(3, 2.0, 256);
        let p = RadialProfile::from_radial_fn(Arc::clone(&g), |r| (1.0 - r).max(0.0));
        let m0 = p.mass();
        let n0 = p.lq_norm_pow(4.0 / 3.0);
        for lambda in [0.5, 1.0, 2.0, 5.0] {
            let q = p.rescale(lambda).unwrap();
            assert!((q.mass() - m0).abs() <= 1e-13 * m0);
            let want = lambda.powi(1) * n0; // lambda^{d-2}, d = 3
            let got = q.lq_norm_pow(4.0 / 3.0);
            assert!((got - want).abs() <= 1e-12 * want.abs());
        }
        let id = p.rescale(1.0).unwrap();
        assert_eq!(id.values(), p.values());
        assert!(p.rescale(0.0).is_err());
        assert!(p.rescale(-2.0).is_err());
    }

    #[test]
    fn refinement_convergence_on_gaussian() {
        // Mass quadrature converges at >= 2nd order for smooth data.
        let reference = {
            let g = grid(3, 12.0, 8192);
            RadialProfile::gaussian(g, 1.0, 1.0)
                .unwrap()
                .second_moment()
        };
        let mut errs = Vec::new();
        for n in [64usize, 128, 256] {
            let g = grid(3, 12.0, n);
            let p = RadialProfile::gaussian(g, 1.0, 1.0).unwrap();
            errs.push((p.second_moment() - reference).abs());
        }
        // Each refinement should cut the error by at least ~4.
        assert!(errs[0] / errs[1] > 3.5, "errors: {errs:?}");
        assert!(errs[1] / errs[2] > 3.5, "errors: {errs:?}");
    }

    #[test]
    fn gaussian_cell_average_mass_is_exact() {
        let g = grid(3, 14.0, 96);
        let p = RadialProfile::gaussian(g, 2.5, 1.3).unwrap();
        // 16-point Gauss-Legendre ingest keeps the mass of the sampled
        // function to near machine precision even on a coarse grid.
        assert!((p.mass() - 2.5).abs() / 2.5 < 1e-10);
    }

    #[test]
    fn resample_conserves_mass() {
        // Source edge 160 sits exactly at r = 1.0.
        let src = grid(3, 2.0, 320);
        let p = RadialProfile::from_radial_fn(Arc::clone(&src), |r| (2.0 - r) * (0.3 + r));
        let dst = grid(3, 2.5, 411);
        let q = p.resample(Arc::clone(&dst)).unwrap();
        assert!((q.mass() - p.mass()).abs() <= 1e-12 * p.mass());
        // Resampling onto the same grid reproduces the values.
        let same = p.resample(Arc::clone(&src)).unwrap();
        for (a, b) in p.values().iter().zip(same.values()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        // Shrinking the domain drops the tail mass only.
        let small = grid(3, 1.0, 97);
        let s = p.resample(small).unwrap();
        let inside = p.cumulative_mass()[160];
        assert!((s.mass() - inside).abs() <= 1e-10 * p.mass());
    }

    #[test]
    fn csv_roundtrip() {
        let g = grid(3, 1.5, 64);
        let p = RadialProfile::from_radial_fn(Arc::clone(&g), |r| (-r * r).exp());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.csv");
        p.write_csv(&path).unwrap();
        let q = RadialProfile::read_csv(g, &path).unwrap();
        assert_eq!(p.values(), q.values());
    }

    #[test]
    fn profile_constructor_checks_lengths() {
        let g = grid(3, 1.0, 16);
        assert!(RadialProfile::new(Arc::clone(&g), vec![0.0; 15]).is_err());
        assert!(RadialProfile::new(g, vec![0.0; 16]).is_ok());
    }

    #[test]
    fn snapshot_reader_rejects_malformed_rows() {
        let g = grid(3, 1.0, 8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "r_center,u\n0.1,not_a_number\n").unwrap();
        assert!(RadialProfile::read_csv(Arc::clone(&g), &path).is_err());
        let path2 = dir.path().join("short.csv");
        std::fs::write(&path2, "r_center,u\n0.1,1.0\n").unwrap();
        // Row count must match the grid.
        assert!(RadialProfile::read_csv(g, &path2).is_err());
    }

    #[test]
    fn support_radius_finds_last_positive_cell() {
        let g = grid(3, 2.0, 128);
        let ball = RadialProfile::ball_indicator(Arc::clone(&g), 0.73, 1.0).unwrap();
        let s = ball.support_radius();
        assert!((0.73..=0.73 + 2.0 * 2.0 / 128.0).contains(&s));
        assert_eq!(RadialProfile::zeros(g).support_radius(), 0.0);
    }
}
