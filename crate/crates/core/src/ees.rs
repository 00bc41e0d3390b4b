//! Moment ("Einstein-Ehrenfest") systems for two quasiparticles.
//!
//! Each quasiparticle `s` carries a mass `sigma_s`, a center `X_s` and a second
//! central moment `alpha_s`. The second-order system is assembled generically
//! from the coefficient partials evaluated at the centers:
//!
//! ```text
//! sigma_s' = a_s sigma_s + a_s2 sigma_s alpha_s / 2
//!            - kappa sigma_s^2 [b_s + (b_s02 + b_s20) alpha_s / 2]
//!            - kappa sigma_s sigma_r [b_sr + (b_sr20 alpha_s + b_sr02 alpha_r) / 2]
//! X_s'     = alpha_s [a_s1 - kappa (sigma_s b_ss10 + sigma_r b_sr10)]
//! alpha_s' = 2 D
//! ```
//!
//! where `r` is the other quasiparticle and `b_srkl` is `d^(k+l) b / dx^k dy^l`
//! at `(X_s, X_r)`. The zeroth-order (Volterra-Gause) system keeps only the
//! mass equations with the kernel evaluated at the initial centers.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{CoefficientProvider, PhysicalParams, Scenario, N_PACKETS};
use crate::ode::{dopri5, DenseSolution, OdeOptions, OdeSystem};

/// Moments of the two quasiparticles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EesState {
    pub x: [f64; N_PACKETS],
    pub sigma: [f64; N_PACKETS],
    pub alpha2: [f64; N_PACKETS],
}

impl EesState {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.x[0],
            self.x[1],
            self.sigma[0],
            self.sigma[1],
            self.alpha2[0],
            self.alpha2[1],
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            x: [v[0], v[1]],
            sigma: [v[2], v[3]],
            alpha2: [v[4], v[5]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Initial moments of the scenario's Gaussian packets.
    pub fn initial(scenario: &Scenario) -> Self {
        let d = scenario.params.diffusion;
        let p = scenario.packets();
        Self {
            x: [p[0].x0, p[1].x0],
            sigma: [p[0].mass(d), p[1].mass(d)],
            alpha2: [p[0].variance(d), p[1].variance(d)],
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: [self.x[1], self.x[0]],
            sigma: [self.sigma[1], self.sigma[0]],
            alpha2: [self.alpha2[1], self.alpha2[0]],
        }
    }
}

fn other(s: usize) -> usize {
    1 - s
}

fn ees2_rhs_unchecked(
    state: &EesState,
    t: f64,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
) -> EesState {
    let kappa = params.kappa;
    let mut out = EesState {
        x: [0.0; N_PACKETS],
        sigma: [0.0; N_PACKETS],
        alpha2: [2.0 * params.diffusion; N_PACKETS],
    };
    for s in 0..N_PACKETS {
        let r = other(s);
        let (xs, xr) = (state.x[s], state.x[r]);
        let (sig_s, sig_r) = (state.sigma[s], state.sigma[r]);
        let (al_s, al_r) = (state.alpha2[s], state.alpha2[r]);

        let a0 = coeffs.a_dx(0, xs, t);
        let a1 = coeffs.a_dx(1, xs, t);
        let a2 = coeffs.a_dx(2, xs, t);

        let self_bracket = coeffs.b_dxy(0, 0, xs, xs, t)
            + 0.5 * (coeffs.b_dxy(0, 2, xs, xs, t) + coeffs.b_dxy(2, 0, xs, xs, t)) * al_s;
        let cross_bracket = coeffs.b_dxy(0, 0, xs, xr, t)
            + 0.5 * (coeffs.b_dxy(2, 0, xs, xr, t) * al_s + coeffs.b_dxy(0, 2, xs, xr, t) * al_r);

        out.sigma[s] = a0 * sig_s + 0.5 * a2 * sig_s * al_s
            - kappa * sig_s * sig_s * self_bracket
            - kappa * sig_s * sig_r * cross_bracket;

        let h1 = sig_s * coeffs.b_dxy(1, 0, xs, xs, t) + sig_r * coeffs.b_dxy(1, 0, xs, xr, t);
        out.x[s] = al_s * (a1 - kappa * h1);
    }
    out
}

/// Right-hand side of the second-order moment system.
pub fn ees2_rhs(
    state: &EesState,
    t: f64,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
) -> Result<EesState> {
    if !state.is_finite() {
        return Err(Error::BlowUp { t });
    }
    Ok(ees2_rhs_unchecked(state, t, coeffs, params))
}

fn ees0_rhs_unchecked(
    sigma: &[f64; N_PACKETS],
    centers: &[f64; N_PACKETS],
    t: f64,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
) -> [f64; N_PACKETS] {
    let mut out = [0.0; N_PACKETS];
    for s in 0..N_PACKETS {
        let r = other(s);
        let (xs, xr) = (centers[s], centers[r]);
        let competition = sigma[s] * coeffs.b(xs, xs, t) + sigma[r] * coeffs.b(xs, xr, t);
        out[s] = coeffs.a(xs, t) * sigma[s] - params.kappa * sigma[s] * competition;
    }
    out
}

/// Volterra-Gause mass equations with the kernel taken at fixed `centers`.
pub fn ees0_rhs(
    sigma: &[f64; N_PACKETS],
    centers: &[f64; N_PACKETS],
    t: f64,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
) -> Result<[f64; N_PACKETS]> {
    if !sigma.iter().chain(centers).all(|v| v.is_finite()) {
        return Err(Error::BlowUp { t });
    }
    Ok(ees0_rhs_unchecked(sigma, centers, t, coeffs, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EesOrder {
    Zero,
    Two,
}

/// A moment system ready for integration.
#[derive(Debug, Clone, Copy)]
pub struct EesModel<'a> {
    pub coeffs: &'a dyn CoefficientProvider,
    pub params: PhysicalParams,
    pub order: EesOrder,
}

struct OrderZeroSystem<'a> {
    model: EesModel<'a>,
    centers: [f64; N_PACKETS],
}

impl OdeSystem for OrderZeroSystem<'_> {
    fn dim(&self) -> usize {
        3 * N_PACKETS
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let sigma = [y[2], y[3]];
        let ds = ees0_rhs_unchecked(&sigma, &self.centers, t, self.model.coeffs, &self.model.params);
        dy[0] = 0.0;
        dy[1] = 0.0;
        dy[2] = ds[0];
        dy[3] = ds[1];
        dy[4] = 2.0 * self.model.params.diffusion;
        dy[5] = 2.0 * self.model.params.diffusion;
    }
}

impl OdeSystem for EesModel<'_> {
    fn dim(&self) -> usize {
        3 * N_PACKETS
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = ees2_rhs_unchecked(&EesState::from_slice(y), t, self.coeffs, &self.params);
        dy.copy_from_slice(&d.to_vec());
    }
}

/// Integrates the moment system from `t = 0` to `t_end` with absolute and
/// relative tolerance `tol`.
///
/// For order zero the centers stay at their initial values and `alpha2`
/// follows `2 D t + alpha2(0)`.
pub fn integrate(model: &EesModel<'_>, initial: EesState, t_end: f64, tol: f64) -> Result<EesTrajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if initial.sigma.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidArgument(
            "initial masses must be nonnegative".into(),
        ));
    }
    if !initial.is_finite() {
        return Err(Error::BlowUp { t: 0.0 });
    }
    let opts = OdeOptions::with_tol(tol);
    let y0 = initial.to_vec();
    let dense = match model.order {
        EesOrder::Two => dopri5(model, 0.0, &y0, t_end, &opts)?,
        EesOrder::Zero => {
            let sys = OrderZeroSystem {
                model: *model,
                centers: initial.x,
            };
            dopri5(&sys, 0.0, &y0, t_end, &opts)?
        }
    };
    Ok(EesTrajectory {
        diffusion: model.params.diffusion,
        order: model.order,
        initial,
        dense,
    })
}

/// Integrates the scenario's moment system of the given order.
pub fn solve_scenario(scenario: &Scenario, order: EesOrder) -> Result<EesTrajectory> {
    solve_scenario_until(scenario, order, scenario.time.t_end)
}

pub fn solve_scenario_until(scenario: &Scenario, order: EesOrder, t_end: f64) -> Result<EesTrajectory> {
    let coeffs = scenario.coefficients();
    let model = EesModel {
        coeffs: coeffs.as_ref(),
        params: scenario.params,
        order,
    };
    integrate(
        &model,
        EesState::initial(scenario),
        t_end,
        scenario.tolerances.ode_tol,
    )
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: EesState,
    pub phase: [f64; N_PACKETS],
}

/// Dense solution of a moment system.
///
/// Values between accepted steps come from cubic Hermite interpolation with
/// the stored right-hand sides. The phase `S_s(t) = D ln(sigma_s(t) / sigma_s(0))`
/// is derived on demand, so `S_s(0) = 0`.
#[derive(Debug, Clone)]
pub struct EesTrajectory {
    diffusion: f64,
    order: EesOrder,
    initial: EesState,
    dense: DenseSolution,
}

impl EesTrajectory {
    pub fn order(&self) -> EesOrder {
        self.order
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn initial(&self) -> EesState {
        self.initial
    }

    pub fn t_end(&self) -> f64 {
        self.dense.t_end()
    }

    /// Times of the accepted integrator steps.
    pub fn step_times(&self) -> &[f64] {
        &self.dense.times
    }

    pub fn state(&self, t: f64) -> Result<EesState> {
        Ok(EesState::from_slice(&self.dense.eval(t)?))
    }

    pub fn sigma(&self, s: usize, t: f64) -> Result<f64> {
        Ok(self.state(t)?.sigma[s])
    }

    /// `sigma_s(t) / sigma_s(tau) = exp((S_s(t) - S_s(tau)) / D)`.
    pub fn sigma_ratio(&self, s: usize, t: f64, tau: f64) -> Result<f64> {
        Ok(self.sigma(s, t)? / self.sigma(s, tau)?)
    }

    pub fn phase(&self, s: usize, t: f64) -> Result<f64> {
        Ok(self.diffusion * (self.sigma(s, t)? / self.initial.sigma[s]).ln())
    }

    /// Largest `|alpha2_s(t) - (2 D t + alpha2_s(0))|` over the accepted steps.
    pub fn alpha_law_residual(&self) -> f64 {
        self.dense
            .times
            .iter()
            .zip(&self.dense.states)
            .flat_map(|(&t, y)| {
                (0..N_PACKETS)
                    .map(move |s| (y[4 + s] - (2.0 * self.diffusion * t + self.initial.alpha2[s])).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `n` uniformly spaced samples over `[0, t_end]`.
    pub fn samples(&self, n: usize) -> Result<Vec<TrajectorySample>> {
        let n = n.max(2);
        let t_end = self.t_end();
        (0..n)
            .map(|i| {
                let t = if i == n - 1 {
                    t_end
                } else {
                    t_end * i as f64 / (n - 1) as f64
                };
                let state = self.state(t)?;
                let phase = [0, 1].map(|s| self.diffusion * (state.sigma[s] / self.initial.sigma[s]).ln());
                Ok(TrajectorySample { t, state, phase })
            })
            .collect()
    }

    /// CSV with columns `t,X1,X2,sigma1,sigma2,alpha1,alpha2,S1,S2`.
    pub fn write_csv<W: Write>(&self, mut out: W, n_samples: usize) -> Result<()> {
        writeln!(out, "t,X1,X2,sigma1,sigma2,alpha1,alpha2,S1,S2")?;
        for row in self.samples(n_samples)? {
            let st = row.state;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.t,
                st.x[0],
                st.x[1],
                st.sigma[0],
                st.sigma[1],
                st.alpha2[0],
                st.alpha2[1],
                row.phase[0],
                row.phase[1]
            )?;
        }
        Ok(())
    }
}

/// Closed-form masses for `a = a0`, `b = 1`:
/// `sigma_s(t) = a e^{at} sigma_s(0) / (a + kappa (e^{at} - 1)(sigma_1(0) + sigma_2(0)))`,
/// with the `a0 = 0` limit `sigma_s(0) / (1 + kappa t (sigma_1(0) + sigma_2(0)))`.
pub fn sigma_exact_constant(
    params: &PhysicalParams,
    a0: f64,
    sigma0: [f64; N_PACKETS],
    t: f64,
) -> [f64; N_PACKETS] {
    let factor = logistic_factor(params.kappa, a0, sigma0[0] + sigma0[1], t);
    [sigma0[0] * factor, sigma0[1] * factor]
}

/// `c(t)` with `c' = a c - kappa W c^2`, `c(0) = 1`.
pub(crate) fn logistic_factor(kappa: f64, a0: f64, total0: f64, t: f64) -> f64 {
    if a0 == 0.0 {
        1.0 / (1.0 + kappa * t * total0)
    } else {
        let g = (a0 * t).exp();
        // (e^{at} - 1) via exp_m1 keeps small-|a t| accuracy.
        a0 * g / (a0 + kappa * (a0 * t).exp_m1() * total0)
    }
}
