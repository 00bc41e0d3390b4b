mod common;

use std::f64::consts::PI;

use common::{bundled, custom};
use quasifkpp::asymptotics::{closed_v0, closed_v0_field, green_apply, ConvolutionMethod, GreenKernel};
use quasifkpp::ees::{sigma_exact_constant, solve_scenario, EesOrder};
use quasifkpp::grid::{distance, Grid, GridField};
use serde_json::json;

fn gaussian(grid: Grid, t: f64, var: f64, center: f64) -> GridField {
    GridField::from_fn(grid, t, Some(0), |x| {
        (-(x - center) * (x - center) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    })
}

#[test]
fn equal_times_give_the_identity() {
    let sc = bundled("fig1");
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let g = GreenKernel::new(&traj, 0, sc.grid(), ConvolutionMethod::Spectral, 1e-8);
    let f = gaussian(sc.grid(), 1.5, 0.03, 0.2);
    let out = green_apply(&g, &f, 1.5).unwrap();
    assert_eq!(out.field.values, f.values);
    assert!(!out.boundary_warning);
}

#[test]
fn heat_propagation_of_a_gaussian_without_growth() {
    // a = 0, kappa = 0: masses are constant, so the kernel is pure heat flow.
    let sc = custom(
        json!({"kind": "constant", "a0": 0.0}),
        0.05,
        0.0,
        (-10.0, 10.0, 2001),
        4.0,
    );
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let grid = sc.grid();
    for method in [ConvolutionMethod::Spectral, ConvolutionMethod::Direct] {
        let g = GreenKernel::new(&traj, 1, grid, method, 1e-8);
        let (v, tau, t) = (0.04, 0.5, 3.0);
        let out = g.apply(&gaussian(grid, tau, v, 0.3), t).unwrap().field;
        let expect = gaussian(grid, t, v + 2.0 * sc.params.diffusion * (t - tau), 0.3);
        assert!(distance(&out, &expect).unwrap().linf < 1e-10, "{method:?}");
        assert!((out.mass() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn propagating_the_initial_packet_gives_the_leading_term() {
    let sc = bundled("constant");
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let grid = sc.grid();
    let d = sc.params.diffusion;
    for s in 0..2 {
        let p = sc.packets()[s];
        let phi = GridField::from_fn(grid, 0.0, Some(s), |x| p.eval(x, d));
        let g = GreenKernel::new(&traj, s, grid, ConvolutionMethod::Spectral, 1e-8);
        let out = g.apply(&phi, 2.0).unwrap().field;
        let v0 = closed_v0_field(&p, &traj, s, &grid, 2.0).unwrap();
        assert!(distance(&out, &v0).unwrap().linf < 1e-10);
    }
}

#[test]
fn leading_term_value_from_composed_closed_forms() {
    // Packet 2 at its center: (sigma(2)/sigma(0)) N gamma / sqrt(4 + gamma^2).
    let sc = bundled("constant");
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let p = sc.packets()[1];
    let sigma = sigma_exact_constant(&sc.params, 1.0, sc.initial_masses(), 2.0);
    let ratio = sigma[1] / sc.initial_masses()[1];
    let expect = ratio * p.amplitude * p.gamma / (4.0 + p.gamma * p.gamma).sqrt();
    let got = closed_v0(&p, &traj, 1, 1.0, 2.0).unwrap();
    assert!((got - expect).abs() < 1e-10 * expect);
    // the mass of the leading term tracks the moment system
    let v0 = closed_v0_field(&p, &traj, 1, &sc.grid(), 2.0).unwrap();
    assert!((v0.mass() - sigma[1]).abs() < 1e-10 * sigma[1]);
    // far tails underflow to zero, never below
    assert!(v0.values.iter().all(|&v| v >= 0.0));
}

#[test]
fn mass_identity_and_semigroup_for_both_methods() {
    let sc = bundled("fig2").with_grid_points(1201).unwrap();
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let grid = sc.grid();
    let f = GridField::from_fn(grid, 0.5, Some(1), |x| {
        ((-(x - 0.5) * (x - 0.5) / 0.08).exp() + 0.3 * (-(x + 1.0) * (x + 1.0) / 0.02).exp()).max(0.0)
    });
    for method in [ConvolutionMethod::Spectral, ConvolutionMethod::Direct] {
        let g = GreenKernel::new(&traj, 1, grid, method, 1e-8);
        for (t1, t2) in [(1.0, 2.0), (2.5, 5.0), (4.0, 9.0)] {
            let whole = g.apply(&f, t2).unwrap();
            assert!(!whole.boundary_warning);
            let ratio = traj.sigma_ratio(1, t2, f.t).unwrap();
            assert!((whole.field.mass() - ratio * f.mass()).abs() < 1e-10 * ratio * f.mass());
            let split = g.apply(&g.apply(&f, t1).unwrap().field, t2).unwrap().field;
            assert!(
                distance(&split, &whole.field).unwrap().l2_rel < 1e-10,
                "{method:?}"
            );
        }
    }
}

#[test]
fn spectral_and_direct_convolutions_agree() {
    let sc = bundled("fig1").with_grid_points(1501).unwrap();
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let grid = sc.grid();
    let f = gaussian(grid, 0.0, 0.02, -1.0);
    let a = GreenKernel::new(&traj, 0, grid, ConvolutionMethod::Spectral, 1e-8)
        .apply(&f, 2.0)
        .unwrap();
    let b = GreenKernel::new(&traj, 0, grid, ConvolutionMethod::Direct, 1e-8)
        .apply(&f, 2.0)
        .unwrap();
    assert!(distance(&a.field, &b.field).unwrap().l2_rel < 1e-12);
}

#[test]
fn kernel_integrates_to_the_mass_ratio() {
    let sc = bundled("fig1");
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let g = GreenKernel::new(&traj, 0, sc.grid(), ConvolutionMethod::Spectral, 1e-8);
    let grid = Grid::new(-5.0, 5.0, 20001).unwrap();
    for &x in &[-1.0, 0.0, 0.7] {
        let vals = grid.sample(|y| g.eval(x, y, 3.0, 1.0).unwrap());
        let ratio = traj.sigma_ratio(0, 3.0, 1.0).unwrap();
        assert!((grid.integrate(&vals) - ratio).abs() < 1e-10 * ratio);
    }
}

#[test]
fn narrow_grids_raise_the_boundary_warning() {
    let sc = custom(
        json!({"kind": "constant", "a0": 0.0}),
        0.05,
        0.0,
        (-1.5, 1.5, 301),
        4.0,
    );
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let g = GreenKernel::new(&traj, 0, sc.grid(), ConvolutionMethod::Spectral, 1e-8);
    let out = g.apply(&gaussian(sc.grid(), 0.0, 0.02, 0.0), 4.0).unwrap();
    assert!(out.boundary_warning);
}

#[test]
fn backwards_propagation_and_foreign_grids_are_errors() {
    let sc = bundled("fig1");
    let traj = solve_scenario(&sc, EesOrder::Two).unwrap();
    let g = GreenKernel::new(&traj, 0, sc.grid(), ConvolutionMethod::Spectral, 1e-8);
    assert!(g.apply(&gaussian(sc.grid(), 2.0, 0.02, 0.0), 1.0).is_err());
    let other = Grid::new(-5.0, 5.0, 101).unwrap();
    assert!(g.apply(&gaussian(other, 0.0, 0.02, 0.0), 1.0).is_err());
}
