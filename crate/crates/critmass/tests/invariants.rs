//! Cross-module invariants: the VHLS bound against the shooting constant,
//! the two-sided L^m bound, virial sign propagation, and the refinement
//! behavior of the dissipation-energy defect.

use critmass::energetics;
use critmass::evolution::{self, Frame, SolverConfig};
use critmass::radial_core::{make_grid, ModelParams, RadialProfile};
use critmass::stationary_profiles::{self, ShootingSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Arc, OnceLock};

fn setup3() -> &'static (ModelParams, ShootingSolution, f64) {
    static CTX: OnceLock<(ModelParams, ShootingSolution, f64)> = OnceLock::new();
    CTX.get_or_init(|| {
        let params = ModelParams::new(3).unwrap();
        let sol = stationary_profiles::lane_emden_unit_ball(&params, 1e-9).unwrap();
        let fine = make_grid(3, 1.0, 8192).unwrap().into_shared();
        let c_star = stationary_profiles::estimate_cstar(&params, &sol, fine).unwrap();
        (params, sol, c_star)
    })
}

#[test]
fn vhls_bound_holds_for_random_profiles() {
    // W(p) <= C_* mass^{2/d} ||p||_m^m, i.e. Lambda(p) <= C_*, with C_*
    // from the stationary route.
    let (_, _, c_star) = setup3();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grid = make_grid(3, 2.0, 96).unwrap().into_shared();
    for _ in 0..200 {
        let values: Vec<f64> = (0..96).map(|_| rng.gen_range(0.0..5.0)).collect();
        let p = RadialProfile::new(Arc::clone(&grid), values).unwrap();
        let lambda = energetics::vhls_ratio(&p).unwrap();
        assert!(
            lambda <= *c_star,
            "Lambda = {lambda} exceeds C_* = {c_star}"
        );
    }
}

#[test]
fn two_sided_lm_bound_brackets_the_free_energy() {
    let (params, sol, c_star) = setup3();
    let m_c = energetics::critical_mass(params, *c_star).unwrap();

    // Unit ball: both slacks must be non-negative up to quadrature noise.
    let grid = make_grid(3, 2.0, 1024).unwrap().into_shared();
    let ball = RadialProfile::ball_indicator(Arc::clone(&grid), 1.0, 1.0).unwrap();
    let lm = ball.lq_norm_pow(params.m);
    let (lo, hi) = energetics::lm_bound_gap(&ball, *c_star, m_c);
    assert!(lo >= -1e-8 * lm, "lower slack {lo}");
    assert!(hi >= -1e-8 * lm, "upper slack {hi}");

    // The stationary profile sits exactly on the lower bound: at M = M_c the
    // bound term vanishes and F(V) ~ 0, so the slack collapses.
    let v = stationary_profiles::stationary_profile(params, sol, 1.0, grid).unwrap();
    let (lo_v, _) = energetics::lm_bound_gap(&v, *c_star, m_c);
    let scale = v.lq_norm_pow(params.m);
    // Both the F(V) and the bound term are quadrature-limited at n = 1024.
    assert!(
        lo_v.abs() <= 5e-5 * scale,
        "stationary slack {lo_v} vs {scale}"
    );
}

#[test]
fn second_moment_follows_the_free_energy_sign() {
    let (params, sol, _) = setup3();

    // F > 0: the second moment is non-decreasing across records.
    let grid = make_grid(3, 6.0, 128).unwrap().into_shared();
    let sub = RadialProfile::gaussian(grid, 100.0, 0.25).unwrap();
    let out = evolution::run(sub, &SolverConfig::new(Frame::Original, 0.05, 0.002)).unwrap();
    assert!(out
        .records
        .windows(2)
        .all(|w| w[1].m2 >= w[0].m2 * (1.0 - 1e-12)));

    // F < 0: the second moment decreases until detection.
    let grid = make_grid(3, 1.25, 256).unwrap().into_shared();
    let v = stationary_profiles::stationary_profile(params, sol, 1.0, grid).unwrap();
    let u0 = v.scaled(2.0);
    let bound = evolution::virial_upper_bound(&u0).unwrap();
    let out = evolution::run(
        u0,
        &SolverConfig::new(Frame::Original, 2.0 * bound, bound / 40.0),
    )
    .unwrap();
    assert!(out.blowup.detected);
    assert!(out
        .records
        .windows(2)
        .all(|w| w[1].m2 <= w[0].m2 * (1.0 + 1e-12)));
}

#[test]
fn fitted_norm_growth_rate_is_stable_under_refinement() {
    // The per-run envelope constant is an empirical fit; it must stay finite
    // and resolution-stable to be usable as a rate.
    let (params, sol, _) = setup3();
    let c_at = |n: usize| {
        let grid = make_grid(3, 1.25, n).unwrap().into_shared();
        let v = stationary_profiles::stationary_profile(params, sol, 1.0, grid).unwrap();
        let u0 = v.scaled(2.0);
        let bound = evolution::virial_upper_bound(&u0).unwrap();
        let out = evolution::run(
            u0,
            &SolverConfig::new(Frame::Original, 2.0 * bound, bound / 40.0),
        )
        .unwrap();
        evolution::fit_lm_growth_rate(params, &out.records).unwrap()
    };
    let coarse = c_at(256);
    let fine = c_at(512);
    assert!(coarse.is_finite() && coarse > 0.0);
    let ratio = fine / coarse;
    assert!((1.0 / 1.5..=1.5).contains(&ratio), "C ratio {ratio}");
}

#[test]
fn dissipation_energy_defect_shrinks_under_refinement() {
    // |F(T) - F(0) + int D dt| is a first-order quantity; halving the cell
    // width should shrink it.
    let (params, _, _) = setup3();
    let m_c = 202.8952;
    let w = stationary_profiles::self_similar_profile(params, 0.5 * m_c, m_c, 1e-9).unwrap();
    let inv = params.inv_m_minus_one();
    let defect_at = |n: usize| {
        let grid = make_grid(3, 6.0, n).unwrap().into_shared();
        let u0 = RadialProfile::from_radial_fn(grid, |r| w.theta_at(r).powf(inv));
        let out = evolution::run(u0, &SolverConfig::new(Frame::Original, 0.25, 0.01)).unwrap();
        let summary = critmass::diagnostics::summarize(&out.records, &out.blowup, vec![]);
        summary.dissipation_defect
    };
    let coarse = defect_at(192);
    let fine = defect_at(384);
    println!("dissipation defect: {coarse:.4e} -> {fine:.4e}");
    assert!(
        fine < coarse / 1.3,
        "defect did not refine: {coarse:.4e} -> {fine:.4e}"
    );
}

#[test]
fn solver_conserves_mass_on_stretched_grids() {
    // The flux assembly is written against general edges; a geometrically
    // stretched grid (finer at the origin) must conserve mass the same way.
    let grid = critmass::radial_core::RadialGrid::stretched(3, 6.0, 200, 1.02)
        .unwrap()
        .into_shared();
    let u0 = RadialProfile::gaussian(grid, 100.0, 0.25).unwrap();
    let m0 = u0.mass();
    let out = evolution::run(u0, &SolverConfig::new(Frame::Original, 0.01, 0.0005)).unwrap();
    assert!(!out.blowup.detected);
    let m1 = out.final_state.profile.mass();
    assert!(
        (m1 - m0).abs() <= 1e-12 * m0,
        "stretched-grid drift {}",
        (m1 - m0).abs()
    );
    assert!(out.final_state.profile.is_non_negative());
}

#[test]
fn steady_run_keeps_the_virial_residual_at_scheme_level() {
    // On a stationary profile F ~ 0 and M2 is constant, so the accumulated
    // virial residual must stay at truncation size, far below M2 itself.
    let (params, sol, _) = setup3();
    let grid = make_grid(3, 1.25, 256).unwrap().into_shared();
    let v = stationary_profiles::stationary_profile(params, sol, 1.0, grid).unwrap();
    let out = evolution::run(v, &SolverConfig::new(Frame::Original, 2e-5, 1e-6)).unwrap();
    let last = out.records.last().unwrap();
    // The residual is dominated by the O(dr) flux truncation drift of M2;
    // measured ~2e-4 relative at n = 256.
    assert!(
        last.virial_residual_cum <= 1e-3 * last.m2,
        "virial residual {} vs M2 {}",
        last.virial_residual_cum,
        last.m2
    );
}

#[test]
fn stationary_family_members_share_the_critical_mass() {
    let (params, sol, _) = setup3();
    let grid = make_grid(3, 2.5, 1024).unwrap().into_shared();
    let mut masses = Vec::new();
    for radius in [0.4, 1.0, 2.2] {
        let family = stationary_profiles::StationaryFamily::new(sol.clone(), radius).unwrap();
        masses.push(family.profile(params, Arc::clone(&grid)).unwrap().mass());
    }
    for m in &masses {
        assert!((m - masses[0]).abs() <= 1e-8 * masses[0], "{masses:?}");
    }
}
