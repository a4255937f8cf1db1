//! Radial numerical laboratory for the critical-mass aggregation-diffusion
//! system
//!
//!   du/dt = div( grad u^m - u grad(K * u) ),   K(x) = c_d |x|^{2-d},
//!
//! in dimension d >= 3 with the critical porous-medium exponent
//! m = 2(d-1)/d. At this exponent diffusion and attraction scale identically
//! and the fate of a solution is decided by its mass alone: below the
//! critical mass M_c solutions are global, above it negative-energy data
//! blows up in finite time, and at M_c the dynamics sits on the boundary.
//!
//! The crate provides
//! - cell-averaged radial profiles with exact shell quadrature
//!   ([`radial_core`]),
//! - the Poisson coupling and interaction functional via Newton's theorem
//!   ([`poisson`]),
//! - free energy, rescaled free energy, VHLS ratio and critical-mass
//!   formulas ([`energetics`]),
//! - shooting solvers for the stationary and self-similar free-boundary
//!   profiles ([`stationary_profiles`]),
//! - an independent maximizer of the VHLS ratio ([`vhls_search`]),
//! - a mass-conservative explicit finite-volume evolution with blow-up
//!   detection ([`evolution`]) and its telemetry ([`diagnostics`]),
//! - a JSON-config experiment runner ([`cli`]).
//!
//! The `examples/` directory has one runnable program per capability; see
//! the README for the full tour.

// `!(x > 0.0)` style guards are used throughout so that NaN inputs fail
// validation; the suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod energetics;
pub mod error;
pub mod evolution;
pub mod poisson;
pub mod radial_core;
pub mod stationary_profiles;
pub mod vhls_search;

pub use error::{Error, Result};
pub use radial_core::{make_grid, ModelParams, RadialGrid, RadialProfile};
