//! Semiclassical asymptotic solution built from a moment trajectory.
//!
//! `u^(K) = sum_s sum_{k<=K} D^{k/2} v^(k)_s`, where `v^(0)` solves the leading
//! linear problem and the corrections follow the Duhamel recursion.

pub mod closed;
pub mod duhamel;
pub mod green;
pub mod quadrature;

use rayon::prelude::*;

use crate::ees::{EesState, EesTrajectory};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::model::{CoefficientProvider, PhysicalParams, Scenario, N_PACKETS};

pub use closed::{
    closed_v0, closed_v0_field, closed_v1_field, exact_constant_field, exact_constant_solution,
};
pub use duhamel::{duhamel_v1, duhamel_v1_v2, duhamel_v2, DuhamelProblem};
pub use green::{green_apply, ConvolutionMethod, GreenKernel, Propagated};

/// Highest correction order implemented.
pub const MAX_ORDER: usize = 2;

/// Coefficients of the first and second order operators for one quasiparticle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AsymptoticOrderCoeffs {
    /// `a_1 - kappa sum_r b_(s,r)10 sigma_r`
    pub k1: f64,
    /// `a_2 / 2 - kappa/2 sum_r b_(s,r)20 sigma_r`
    pub k2: f64,
}

/// `k1`, `k2` for both quasiparticles at the moments `state`.
pub fn order_coeffs(
    state: &EesState,
    t: f64,
    coeffs: &dyn CoefficientProvider,
    params: &PhysicalParams,
) -> [AsymptoticOrderCoeffs; N_PACKETS] {
    let mut out = [AsymptoticOrderCoeffs::default(); N_PACKETS];
    for (s, c) in out.iter_mut().enumerate() {
        let xs = state.x[s];
        let (mut h1, mut h2) = (0.0, 0.0);
        for r in 0..N_PACKETS {
            h1 += coeffs.b_dxy(1, 0, xs, state.x[r], t) * state.sigma[r];
            h2 += coeffs.b_dxy(2, 0, xs, state.x[r], t) * state.sigma[r];
        }
        c.k1 = coeffs.a_dx(1, xs, t) - params.kappa * h1;
        c.k2 = 0.5 * coeffs.a_dx(2, xs, t) - 0.5 * params.kappa * h2;
    }
    out
}

/// `sum_s sum_{k<=order} D^{k/2} terms[s][k]`.
pub fn composite(terms: &[Vec<GridField>], order: usize, params: &PhysicalParams) -> Result<GridField> {
    if order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "order {order} exceeds the implemented maximum {MAX_ORDER}"
        )));
    }
    let first = terms
        .first()
        .and_then(|v| v.first())
        .ok_or_else(|| Error::InvalidArgument("no terms to combine".into()))?;
    let mut values = vec![0.0; first.values.len()];
    for per_s in terms {
        if per_s.len() <= order {
            return Err(Error::InvalidArgument(format!(
                "order {order} requested but only {} terms supplied",
                per_s.len()
            )));
        }
        for (k, field) in per_s.iter().take(order + 1).enumerate() {
            first.check_compatible(field)?;
            let w = params.diffusion.powf(0.5 * k as f64);
            for (acc, v) in values.iter_mut().zip(&field.values) {
                *acc += w * v;
            }
        }
    }
    GridField::new(first.grid, values, first.t, None)
}

/// Terms `v^(0..=k_max)` for both quasiparticles at one time.
#[derive(Debug, Clone)]
pub struct AsymptoticSnapshot {
    pub t: f64,
    /// `terms[s][k]`
    pub terms: Vec<Vec<GridField>>,
}

impl AsymptoticSnapshot {
    pub fn k_max(&self) -> usize {
        self.terms[0].len() - 1
    }

    pub fn composite(&self, order: usize, params: &PhysicalParams) -> Result<GridField> {
        composite(&self.terms, order, params)
    }
}

/// Builds `u^(K)` on a grid from a second-order moment trajectory.
#[derive(Debug)]
pub struct AsymptoticSolver<'a> {
    pub scenario: &'a Scenario,
    pub traj: &'a EesTrajectory,
    pub coeffs: &'a dyn CoefficientProvider,
    pub grid: Grid,
    pub quad_tol: f64,
    pub method: ConvolutionMethod,
}

impl<'a> AsymptoticSolver<'a> {
    pub fn new(scenario: &'a Scenario, traj: &'a EesTrajectory, coeffs: &'a dyn CoefficientProvider) -> Self {
        Self {
            scenario,
            traj,
            coeffs,
            grid: scenario.grid(),
            quad_tol: scenario.tolerances.quad_tol,
            method: ConvolutionMethod::default(),
        }
    }

    pub fn problem(&self, s: usize) -> DuhamelProblem<'a> {
        DuhamelProblem {
            traj: self.traj,
            coeffs: self.coeffs,
            params: self.scenario.params,
            packet: self.scenario.packets()[s],
            s,
            grid: self.grid,
            quad_tol: self.quad_tol,
            method: self.method,
        }
    }

    /// `v^(0..=k_max)_s` at `t`.
    pub fn terms(&self, s: usize, t: f64, k_max: usize) -> Result<Vec<GridField>> {
        if k_max > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "K = {k_max} exceeds the implemented maximum {MAX_ORDER}"
            )));
        }
        let problem = self.problem(s);
        let mut out = vec![closed_v0_field(&problem.packet, self.traj, s, &self.grid, t)?];
        if k_max >= 1 {
            out.push(duhamel_v1(&problem, t)?);
        }
        if k_max >= 2 {
            out.push(duhamel_v2(&problem, t)?);
        }
        Ok(out)
    }

    /// Snapshots at each of `times`, computed in parallel over times and
    /// quasiparticles.
    pub fn solve(&self, times: &[f64], k_max: usize) -> Result<Vec<AsymptoticSnapshot>> {
        let jobs: Vec<(usize, usize)> = (0..times.len())
            .flat_map(|i| (0..N_PACKETS).map(move |s| (i, s)))
            .collect();
        let results: Vec<Result<Vec<GridField>>> = jobs
            .par_iter()
            .map(|&(i, s)| self.terms(s, times[i], k_max))
            .collect();
        let mut results = results.into_iter();
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let mut terms = Vec::with_capacity(N_PACKETS);
            for _ in 0..N_PACKETS {
                terms.push(results.next().expect("one result per job")?);
            }
            out.push(AsymptoticSnapshot { t, terms });
        }
        Ok(out)
    }
}
