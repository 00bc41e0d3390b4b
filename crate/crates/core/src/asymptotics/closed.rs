//! Closed-form terms for Gaussian initial packets.
//!
//! With `g(t) = gamma^2 + 2t` the leading term stays a Gaussian around the
//! initial center whose mass follows the moment trajectory:
//!
//! ```text
//! v0_s(x,t) = N (sigma_s(t)/sigma_s(0)) gamma / sqrt(g(t)) exp(-(x-x0)^2 / (2 D g(t)))
//! v1_s(x,t) = v0_s(x,t) D^{-1/2} / g(t)
//!             * int_0^t k1_s(tau) [g(tau)(x - x0) - g(t)(X_s(tau) - x0)] dtau
//! ```

use crate::asymptotics::order_coeffs;
use crate::asymptotics::quadrature::adaptive_simpson;
use crate::ees::{logistic_factor, EesTrajectory};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::model::{CoefficientProvider, GaussianPacket, PhysicalParams, Scenario};

fn spread_width(gamma: f64, t: f64) -> f64 {
    gamma * gamma + 2.0 * t
}

/// Leading term of quasiparticle `s` at `(x, t)`.
pub fn closed_v0(packet: &GaussianPacket, traj: &EesTrajectory, s: usize, x: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let ratio = traj.sigma_ratio(s, t, 0.0)?;
    Ok(v0_profile(packet, traj.diffusion(), ratio, x, t))
}

fn v0_profile(packet: &GaussianPacket, diffusion: f64, ratio: f64, x: f64, t: f64) -> f64 {
    let g = spread_width(packet.gamma, t);
    let dx = x - packet.x0;
    packet.amplitude * ratio * packet.gamma / g.sqrt() * (-(dx * dx) / (2.0 * diffusion * g)).exp()
}

/// `closed_v0` sampled on a grid.
pub fn closed_v0_field(
    packet: &GaussianPacket,
    traj: &EesTrajectory,
    s: usize,
    grid: &Grid,
    t: f64,
) -> Result<GridField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let ratio = traj.sigma_ratio(s, t, 0.0)?;
    let d = traj.diffusion();
    Ok(GridField::from_fn(*grid, t, Some(s), |x| {
        v0_profile(packet, d, ratio, x, t)
    }))
}

/// First correction from its closed form. The two time integrals are computed
/// by adaptive Simpson to `tol` (relative).
#[allow(clippy::too_many_arguments)]
pub fn closed_v1_field(
    packet: &GaussianPacket,
    traj: &EesTrajectory,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
    s: usize,
    grid: &Grid,
    t: f64,
    tol: f64,
) -> Result<GridField> {
    let gamma2 = packet.gamma * packet.gamma;
    let k1 = |tau: f64| -> Result<f64> {
        let st = traj.state(tau)?;
        Ok(order_coeffs(&st, tau, coeffs, params)[s].k1)
    };
    let int_g = adaptive_simpson(|tau| Ok(k1(tau)? * (gamma2 + 2.0 * tau)), 0.0, t, tol)?;
    let int_x = adaptive_simpson(
        |tau| Ok(k1(tau)? * (traj.state(tau)?.x[s] - packet.x0)),
        0.0,
        t,
        tol,
    )?;
    let g_t = spread_width(packet.gamma, t);
    let scale = 1.0 / (params.diffusion.sqrt() * g_t);
    let v0 = closed_v0_field(packet, traj, s, grid, t)?;
    let values = grid
        .points()
        .into_iter()
        .zip(&v0.values)
        .map(|(x, v)| v * scale * (int_g * (x - packet.x0) - g_t * int_x))
        .collect();
    GridField::new(*grid, values, t, Some(s))
}

/// Exact solution for `a = a0`, `b = 1`:
/// `u = c(t) sum_s N_s gamma_s / sqrt(g_s(t)) exp(-(x - x0_s)^2 / (2 D g_s(t)))`,
/// where `c` solves the logistic law seeded with the total initial mass.
pub fn exact_constant_solution(scenario: &Scenario, x: f64, t: f64) -> Result<f64> {
    let a0 = scenario.coeffs.constant_rate().ok_or_else(|| {
        Error::InvalidArgument(
            "the closed-form solution holds only for constant coefficients (a = a0, b = 1)".into(),
        )
    })?;
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let masses = scenario.initial_masses();
    let c = logistic_factor(scenario.params.kappa, a0, masses[0] + masses[1], t);
    let d = scenario.params.diffusion;
    Ok(scenario.packets().iter().map(|p| v0_profile(p, d, c, x, t)).sum())
}

pub fn exact_constant_field(scenario: &Scenario, grid: &Grid, t: f64) -> Result<GridField> {
    let values = grid
        .points()
        .into_iter()
        .map(|x| exact_constant_solution(scenario, x, t))
        .collect::<Result<Vec<_>>>()?;
    GridField::new(*grid, values, t, None)
}
