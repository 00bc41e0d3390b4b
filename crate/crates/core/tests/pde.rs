mod common;

use common::{bundled, custom, max_abs_diff};
use quasifkpp::ees::{sigma_exact_constant, solve_scenario, EesOrder};
use quasifkpp::grid::{distance, Grid};
use quasifkpp::model::CoefficientProvider;
use quasifkpp::pde::{
    measure_moments, solve_fkpp, solve_fkppds, NonlocalMethod, NonlocalOperator, PdeSolverConfig,
};
use serde_json::json;

fn config(sc: &quasifkpp::Scenario) -> PdeSolverConfig {
    PdeSolverConfig::from_scenario(sc)
}

#[test]
fn pure_diffusion_conserves_mass_and_spreads_linearly() {
    let sc = custom(
        json!({"kind": "constant", "a0": 0.0}),
        0.05,
        0.0,
        (-8.0, 8.0, 801),
        2.0,
    );
    let d = sc.params.diffusion;
    let sol = solve_fkppds(&sc, &config(&sc), &[0.0, 1.0, 2.0]).unwrap();
    for (s, p) in sc.packets().iter().enumerate() {
        let m0 = p.mass(d);
        for (snap, t) in sol.components.iter().zip([0.0, 1.0, 2.0]) {
            let m = measure_moments(&snap[s], p.x0).unwrap();
            assert!((m.sigma - m0).abs() < 1e-8 * m0, "mass drift {}", m.sigma - m0);
            let var = p.variance(d) + 2.0 * d * t;
            assert!((m.alpha2 - var).abs() < 0.01 * var);
            assert!((m.x_u - p.x0).abs() < 1e-8);
        }
    }
    assert!(!sol.diagnostics.boundary_leak);
}

#[test]
fn solutions_stay_nonnegative() {
    let sc = bundled("fig2").with_grid_points(1201).unwrap();
    let sol = solve_fkpp(&sc, &config(&sc), &[0.5, 2.0, 4.0]).unwrap();
    for f in &sol.fields {
        let min = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12 * f.max_abs(), "min {min:e} at t={}", f.t);
    }
}

#[test]
fn fft_and_direct_nonlocal_terms_give_the_same_run() {
    let sc = bundled("fig1").with_grid_points(601).unwrap();
    let times = [1.0, 2.0];
    let fft = solve_fkpp(
        &sc,
        &config(&sc).with_method(NonlocalMethod::FftConvolution),
        &times,
    )
    .unwrap();
    let direct = solve_fkpp(
        &sc,
        &config(&sc).with_method(NonlocalMethod::DirectQuadrature),
        &times,
    )
    .unwrap();
    assert_eq!(fft.diagnostics.steps, direct.diagnostics.steps);
    for (a, b) in fft.fields.iter().zip(&direct.fields) {
        assert!(max_abs_diff(&a.values, &b.values) < 1e-10);
    }
    assert_eq!(
        direct.diagnostics.nonlocal_method,
        NonlocalMethod::DirectQuadrature
    );
}

#[test]
fn decomposition_components_sum_to_the_total() {
    let sc = bundled("fig2").with_grid_points(1201).unwrap();
    let times = [0.0, 1.5, 3.0];
    let total = solve_fkpp(&sc, &config(&sc), &times).unwrap();
    let parts = solve_fkppds(&sc, &config(&sc), &times).unwrap().totals().unwrap();
    for (a, b) in total.fields.iter().zip(&parts) {
        assert!(max_abs_diff(&a.values, &b.values) < 1e-10 * a.max_abs());
    }
}

#[test]
fn measured_moments_follow_the_moment_system_early_on() {
    let sc = bundled("fig1").with_grid_points(2001).unwrap();
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let sol = solve_fkppds(&sc, &config(&sc), &[2.0]).unwrap();
    let ees = traj.state(2.0).unwrap();
    for s in 0..2 {
        let m = measure_moments(&sol.components[0][s], ees.x[s]).unwrap();
        assert!((m.sigma - ees.sigma[s]).abs() < 0.03 * m.sigma);
        assert!((m.x_u - ees.x[s]).abs() < 0.03);
        // the variance law is the first place the closure error shows up
        assert!((m.alpha2 - ees.alpha2[s]).abs() < 0.05 * m.alpha2);
    }
}

#[test]
fn component_masses_match_the_logistic_closed_form() {
    let sc = custom(
        json!({"kind": "constant", "a0": 1.0}),
        0.02,
        1.0,
        (-8.0, 8.0, 801),
        3.0,
    );
    let times = [1.0, 2.0, 3.0];
    let sol = solve_fkppds(&sc, &config(&sc), &times).unwrap();
    for (snap, &t) in sol.components.iter().zip(&times) {
        let exact = sigma_exact_constant(&sc.params, 1.0, sc.initial_masses(), t);
        for s in 0..2 {
            let m = snap[s].mass();
            assert!(
                (m - exact[s]).abs() < 1e-2 * exact[s],
                "t={t} s={s}: {m} vs {}",
                exact[s]
            );
        }
    }
}

#[test]
fn refinement_error_shrinks_at_second_order() {
    let base = bundled("fig1");
    let sc = custom(
        serde_json::to_value(base.coeffs).unwrap(),
        0.02,
        1.0,
        (-6.0, 6.0, 241),
        1.0,
    );
    let runs: Vec<_> = [241, 481, 961]
        .iter()
        .map(|&n| {
            let s = sc.with_grid_points(n).unwrap();
            solve_fkpp(&s, &config(&s), &[1.0]).unwrap().fields.remove(0)
        })
        .collect();
    // restrict the finer fields to the coarse nodes
    let coarse = |v: &[f64], stride: usize| v.iter().step_by(stride).cloned().collect::<Vec<_>>();
    let e1 = max_abs_diff(&runs[0].values, &coarse(&runs[1].values, 2));
    let e2 = max_abs_diff(&coarse(&runs[1].values, 2), &coarse(&runs[2].values, 4));
    let ratio = e1 / e2;
    assert!(ratio > 3.0 && ratio < 5.5, "ratio {ratio} ({e1:e} / {e2:e})");
}

#[derive(Debug)]
struct Anchored;

impl CoefficientProvider for Anchored {
    fn a(&self, _x: f64, _t: f64) -> f64 {
        1.0
    }
    fn a_dx(&self, order: u8, _x: f64, _t: f64) -> f64 {
        if order == 0 {
            1.0
        } else {
            0.0
        }
    }
    fn b(&self, x: f64, y: f64, _t: f64) -> f64 {
        (-(x * x + y * y)).exp()
    }
    fn b_dxy(&self, _kx: u8, _ky: u8, _x: f64, _y: f64, _t: f64) -> f64 {
        unimplemented!()
    }
    fn translation_invariant(&self) -> bool {
        false
    }
}

#[test]
fn fft_convolution_needs_a_translation_invariant_kernel() {
    let grid = Grid::new(-3.0, 3.0, 61).unwrap();
    assert!(NonlocalOperator::new(&Anchored, grid, NonlocalMethod::FftConvolution).is_err());
    let op = NonlocalOperator::new(&Anchored, grid, NonlocalMethod::DirectQuadrature).unwrap();
    // b separates, so the integral is exp(-x^2) * int exp(-y^2) u(y) dy
    let u = grid.sample(|y| (-y * y).exp());
    let out = op.apply(&u, 0.0);
    let w = grid.integrate(&grid.sample(|y| (-2.0 * y * y).exp()));
    for (i, v) in out.iter().enumerate() {
        let x = grid.x(i);
        assert!((v - (-x * x).exp() * w).abs() < 1e-12);
    }
}

#[test]
fn narrow_domains_flag_boundary_leakage() {
    let sc = custom(
        json!({"kind": "constant", "a0": 1.0}),
        0.05,
        1.0,
        (-2.0, 2.0, 201),
        3.0,
    );
    let sol = solve_fkpp(&sc, &config(&sc), &[3.0]).unwrap();
    assert!(sol.diagnostics.boundary_leak);
}

#[test]
fn sample_times_are_hit_exactly_and_must_be_sorted() {
    let sc = custom(
        json!({"kind": "constant", "a0": 1.0}),
        0.02,
        1.0,
        (-6.0, 6.0, 301),
        1.0,
    );
    let sol = solve_fkpp(&sc, &config(&sc), &[0.0, 0.3337, 1.0]).unwrap();
    let ts: Vec<f64> = sol.fields.iter().map(|f| f.t).collect();
    assert_eq!(ts, vec![0.0, 0.3337, 1.0]);
    assert!(solve_fkpp(&sc, &config(&sc), &[1.0, 0.5]).is_err());
    let init = distance(&sol.fields[0], &sol.fields[0]).unwrap();
    assert_eq!(init.linf, 0.0);
}
