#![allow(dead_code)]

use std::path::PathBuf;

use quasifkpp::model::Scenario;
use serde_json::{json, Value};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

pub fn bundled(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap()
}

/// Two default packets with the given coefficients, on a configurable grid.
pub fn custom(coeffs: Value, d: f64, kappa: f64, grid: (f64, f64, usize), t_end: f64) -> Scenario {
    let v = json!({
        "id": "custom",
        "params": { "D": d, "kappa": kappa },
        "coeffs": coeffs,
        "packets": [
            { "N": 0.5, "gamma": 1.0, "x0": -1.0 },
            { "N": 1.0, "gamma": 1.5, "x0": 1.0 }
        ],
        "grid": { "x_min": grid.0, "x_max": grid.1, "n_points": grid.2 },
        "time": { "t_end": t_end, "n_samples": 11 },
        "tolerances": { "ode_tol": 1e-11, "quad_tol": 1e-9 }
    });
    Scenario::from_json(&v.to_string()).unwrap()
}

pub fn with_packets(mut sc: Scenario, packets: [(f64, f64, f64); 2]) -> Scenario {
    for (p, (n, g, x0)) in sc.packets.iter_mut().zip(packets) {
        p.amplitude = n;
        p.gamma = g;
        p.x0 = x0;
    }
    sc.validate().unwrap();
    sc
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
