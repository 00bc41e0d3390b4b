//! Reference finite-difference solver for the nonlocal FKPP equation and for
//! its two-component decomposition.
//!
//! Each step is a Strang splitting: a Crank-Nicolson half step for `D u_xx`
//! with homogeneous Neumann ends, an explicit midpoint step for the reaction
//! `u_s (a - kappa B[u_1 + u_2])`, and another diffusion half step. The
//! diffusion is linear and the reaction rate depends only on the total
//! density, so the components of the decomposition add up to the
//! single-field solution step by step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid, GridField};
use crate::model::{CoefficientProvider, Scenario, N_PACKETS};
use crate::spectral::KernelConvolver;

/// How `B[u](x) = int b(x,y,t) u(y) dy` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlocalMethod {
    /// Linear convolution by FFT; needs a translation-invariant kernel.
    FftConvolution,
    /// Trapezoid rule, O(N^2) per evaluation.
    DirectQuadrature,
}

impl std::fmt::Display for NonlocalMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NonlocalMethod::FftConvolution => "fft_convolution",
            NonlocalMethod::DirectQuadrature => "direct_quadrature",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSolverConfig {
    pub grid: Grid,
    pub dt_safety: f64,
    pub nonlocal_method: NonlocalMethod,
}

/// Boundary values above this fraction of the maximum raise the leak flag.
pub const BOUNDARY_LEAK_THRESHOLD: f64 = 1e-12;

/// Smallest time step accepted before giving up.
const DT_FLOOR: f64 = 1e-10;

impl PdeSolverConfig {
    /// Grid and safety factor from the scenario; FFT convolution whenever the
    /// kernel allows it.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let method = if scenario.coefficients().translation_invariant() {
            NonlocalMethod::FftConvolution
        } else {
            NonlocalMethod::DirectQuadrature
        };
        Self {
            grid: scenario.grid(),
            dt_safety: scenario.tolerances.pde_dt_safety,
            nonlocal_method: method,
        }
    }

    pub fn with_method(mut self, method: NonlocalMethod) -> Self {
        self.nonlocal_method = method;
        self
    }

    fn validate(&self, coeffs: &dyn CoefficientProvider) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::Config(format!(
                "dt_safety must lie in (0, 1], got {}",
                self.dt_safety
            )));
        }
        if self.nonlocal_method == NonlocalMethod::FftConvolution && !coeffs.translation_invariant() {
            return Err(Error::Config(
                "fft_convolution requires a translation-invariant kernel".into(),
            ));
        }
        Ok(())
    }

    /// `dt_safety * dx^2 / (2D)`, capped at `dt_safety * 0.01 / max|a|`.
    pub fn time_step(&self, coeffs: &dyn CoefficientProvider, diffusion: f64) -> f64 {
        let dx = self.grid.dx();
        let mut dt = self.dt_safety * dx * dx / (2.0 * diffusion);
        let a_max = self
            .grid
            .points()
            .into_iter()
            .map(|x| coeffs.a(x, 0.0).abs())
            .fold(0.0, f64::max);
        if a_max > 0.0 {
            dt = dt.min(self.dt_safety * 0.01 / a_max);
        }
        dt
    }
}

/// Run statistics reported next to the fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeDiagnostics {
    pub dt_used: f64,
    pub steps: usize,
    pub boundary_leak: bool,
    pub nonlocal_method: NonlocalMethod,
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub fields: Vec<GridField>,
    pub diagnostics: PdeDiagnostics,
}

#[derive(Debug, Clone)]
pub struct DecompositionSolution {
    /// `components[i][s]` is `u_s` at the `i`-th sample time.
    pub components: Vec<[GridField; N_PACKETS]>,
    pub diagnostics: PdeDiagnostics,
}

impl DecompositionSolution {
    pub fn totals(&self) -> Result<Vec<GridField>> {
        self.components
            .iter()
            .map(|[u1, u2]| {
                u1.check_compatible(u2)?;
                let v = u1.values.iter().zip(&u2.values).map(|(a, b)| a + b).collect();
                GridField::new(u1.grid, v, u1.t, None)
            })
            .collect()
    }
}

/// Evaluates `B[u]` on the grid.
pub struct NonlocalOperator<'a> {
    coeffs: &'a dyn CoefficientProvider,
    grid: Grid,
    method: NonlocalMethod,
    cached: Option<KernelConvolver>,
}

impl std::fmt::Debug for NonlocalOperator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlocalOperator")
            .field("grid", &self.grid)
            .field("method", &self.method)
            .finish()
    }
}

impl<'a> NonlocalOperator<'a> {
    pub fn new(coeffs: &'a dyn CoefficientProvider, grid: Grid, method: NonlocalMethod) -> Result<Self> {
        if method == NonlocalMethod::FftConvolution && !coeffs.translation_invariant() {
            return Err(Error::Config(
                "fft_convolution requires a translation-invariant kernel".into(),
            ));
        }
        let cached = (method == NonlocalMethod::FftConvolution && coeffs.time_independent())
            .then(|| KernelConvolver::new(&grid, |d| coeffs.b(d, 0.0, 0.0)));
        Ok(Self {
            coeffs,
            grid,
            method,
            cached,
        })
    }

    pub fn apply(&self, u: &[f64], t: f64) -> Vec<f64> {
        match self.method {
            NonlocalMethod::FftConvolution => match &self.cached {
                Some(conv) => conv.apply(u),
                None => KernelConvolver::new(&self.grid, |d| self.coeffs.b(d, 0.0, t)).apply(u),
            },
            NonlocalMethod::DirectQuadrature => {
                let xs = self.grid.points();
                let w = self.grid.weights();
                xs.par_iter()
                    .map(|&x| {
                        let terms: Vec<f64> = xs
                            .iter()
                            .zip(&w)
                            .zip(u)
                            .map(|((&y, w), u)| self.coeffs.b(x, y, t) * w * u)
                            .collect();
                        pairwise_sum(&terms)
                    })
                    .collect()
            }
        }
    }
}

/// Crank-Nicolson step for `u_t = D u_xx` with mirrored ghost points.
///
/// The discrete Laplacian has rows `(1, -2, 1) / dx^2` inside and
/// `(-2, 2) / dx^2` at the ends, which conserves the trapezoid mass exactly.
#[derive(Debug, Clone)]
struct CrankNicolson {
    r: f64,
    // LU factors of the implicit matrix (Thomas algorithm)
    upper: Vec<f64>,
    pivot: Vec<f64>,
    lower: Vec<f64>,
}

impl CrankNicolson {
    fn new(n: usize, diffusion: f64, dx: f64, dt: f64) -> Self {
        let r = 0.5 * diffusion * dt / (dx * dx);
        // implicit matrix I - r L
        let diag = vec![1.0 + 2.0 * r; n];
        let mut sup = vec![-r; n - 1];
        let mut sub = vec![-r; n - 1];
        sup[0] = -2.0 * r;
        sub[n - 2] = -2.0 * r;
        let mut pivot = vec![0.0; n];
        let mut lower = vec![0.0; n - 1];
        pivot[0] = diag[0];
        for i in 1..n {
            lower[i - 1] = sub[i - 1] / pivot[i - 1];
            pivot[i] = diag[i] - lower[i - 1] * sup[i - 1];
        }
        Self {
            r,
            upper: sup,
            pivot,
            lower,
        }
    }

    fn step(&self, u: &mut [f64]) {
        let n = u.len();
        let r = self.r;
        let mut rhs = vec![0.0; n];
        rhs[0] = (1.0 - 2.0 * r) * u[0] + 2.0 * r * u[1];
        for i in 1..n - 1 {
            rhs[i] = r * u[i - 1] + (1.0 - 2.0 * r) * u[i] + r * u[i + 1];
        }
        rhs[n - 1] = 2.0 * r * u[n - 2] + (1.0 - 2.0 * r) * u[n - 1];
        for i in 1..n {
            rhs[i] -= self.lower[i - 1] * rhs[i - 1];
        }
        u[n - 1] = rhs[n - 1] / self.pivot[n - 1];
        for i in (0..n - 1).rev() {
            u[i] = (rhs[i] - self.upper[i] * u[i + 1]) / self.pivot[i];
        }
    }
}

struct Stepper<'a> {
    coeffs: &'a dyn CoefficientProvider,
    kappa: f64,
    grid: Grid,
    nonlocal: NonlocalOperator<'a>,
    rate_a: Option<Vec<f64>>,
    diffusion: f64,
}

impl Stepper<'_> {
    fn growth(&self, t: f64) -> Vec<f64> {
        match &self.rate_a {
            Some(a) => a.clone(),
            None => self.grid.sample(|x| self.coeffs.a(x, t)),
        }
    }

    /// Per-point rate `a - kappa B[sum_s u_s]`.
    fn rate(&self, comps: &[Vec<f64>], t: f64) -> Vec<f64> {
        let total: Vec<f64> = if comps.len() == 1 {
            comps[0].clone()
        } else {
            (0..self.grid.len())
                .map(|i| comps.iter().map(|c| c[i]).sum())
                .collect()
        };
        let b = self.nonlocal.apply(&total, t);
        self.growth(t)
            .iter()
            .zip(&b)
            .map(|(a, b)| a - self.kappa * b)
            .collect()
    }

    fn react(&self, comps: &mut [Vec<f64>], t: f64, dt: f64) {
        let rate0 = self.rate(comps, t);
        let half: Vec<Vec<f64>> = comps
            .iter()
            .map(|u| u.iter().zip(&rate0).map(|(u, r)| u + 0.5 * dt * r * u).collect())
            .collect();
        let rate_mid = self.rate(&half, t + 0.5 * dt);
        for (u, h) in comps.iter_mut().zip(&half) {
            for ((u, h), r) in u.iter_mut().zip(h).zip(&rate_mid) {
                *u += dt * r * h;
            }
        }
    }

    fn step(&self, comps: &mut [Vec<f64>], t: f64, dt: f64, cn: &CrankNicolson) {
        comps.par_iter_mut().for_each(|u| cn.step(u));
        self.react(comps, t, dt);
        comps.par_iter_mut().for_each(|u| cn.step(u));
    }
}

fn check_sample_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "sample times must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "sample times must be nondecreasing".into(),
        ));
    }
    Ok(())
}

fn leaks(grid: &Grid, comps: &[Vec<f64>]) -> bool {
    let n = grid.len();
    let total: Vec<f64> = (0..n).map(|i| comps.iter().map(|c| c[i]).sum()).collect();
    let max = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    max > 0.0 && total[0].abs().max(total[n - 1].abs()) > BOUNDARY_LEAK_THRESHOLD * max
}

/// Advances `initial` components and returns snapshots at `times`.
fn run(
    scenario: &Scenario,
    config: &PdeSolverConfig,
    initial: Vec<Vec<f64>>,
    times: &[f64],
) -> Result<(Vec<Vec<Vec<f64>>>, PdeDiagnostics)> {
    check_sample_times(times)?;
    let coeffs_arc = scenario.coefficients();
    let coeffs = coeffs_arc.as_ref();
    config.validate(coeffs)?;
    let diffusion = scenario.params.diffusion;
    let grid = config.grid;
    let dt = config.time_step(coeffs, diffusion);
    if dt < DT_FLOOR {
        return Err(Error::StepUnderflow { t: 0.0 });
    }
    let stepper = Stepper {
        coeffs,
        kappa: scenario.params.kappa,
        grid,
        nonlocal: NonlocalOperator::new(coeffs, grid, config.nonlocal_method)?,
        rate_a: coeffs
            .time_independent()
            .then(|| grid.sample(|x| coeffs.a(x, 0.0))),
        diffusion,
    };
    let full = CrankNicolson::new(grid.len(), stepper.diffusion, grid.dx(), 0.5 * dt);

    let mut comps = initial;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut leak = leaks(&grid, &comps);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while target - t > 1e-12 * target.max(1.0) {
            let h = dt.min(target - t);
            if h == dt {
                stepper.step(&mut comps, t, h, &full);
            } else {
                let short = CrankNicolson::new(grid.len(), diffusion, grid.dx(), 0.5 * h);
                stepper.step(&mut comps, t, h, &short);
            }
            t += h;
            steps += 1;
            if comps.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { t });
            }
        }
        t = target;
        leak |= leaks(&grid, &comps);
        out.push(comps.clone());
    }
    Ok((
        out,
        PdeDiagnostics {
            dt_used: dt,
            steps,
            boundary_leak: leak,
            nonlocal_method: config.nonlocal_method,
        },
    ))
}

/// Solves for the total density `u` starting from the sum of the packets.
pub fn solve_fkpp(
    scenario: &Scenario,
    config: &PdeSolverConfig,
    sample_times: &[f64],
) -> Result<PdeSolution> {
    let grid = config.grid;
    let d = scenario.params.diffusion;
    let packets = scenario.packets();
    let u0 = grid.sample(|x| packets.iter().map(|p| p.eval(x, d)).sum());
    let (snaps, diagnostics) = run(scenario, config, vec![u0], sample_times)?;
    let fields = snaps
        .into_iter()
        .zip(sample_times)
        .map(|(mut c, &t)| GridField::new(grid, c.remove(0), t, None))
        .collect::<Result<_>>()?;
    Ok(PdeSolution { fields, diagnostics })
}

/// Solves the two-component decomposition system, one component per packet.
pub fn solve_fkppds(
    scenario: &Scenario,
    config: &PdeSolverConfig,
    sample_times: &[f64],
) -> Result<DecompositionSolution> {
    let grid = config.grid;
    let d = scenario.params.diffusion;
    let init = scenario
        .packets()
        .iter()
        .map(|p| grid.sample(|x| p.eval(x, d)))
        .collect();
    let (snaps, diagnostics) = run(scenario, config, init, sample_times)?;
    let components = snaps
        .into_iter()
        .zip(sample_times)
        .map(|(c, &t)| {
            let mut it = c.into_iter().enumerate();
            let mut next = || {
                let (s, v) = it.next().expect("two components");
                GridField::new(grid, v, t, Some(s))
            };
            Ok([next()?, next()?])
        })
        .collect::<Result<_>>()?;
    Ok(DecompositionSolution {
        components,
        diagnostics,
    })
}

/// Zeroth, first and centered second moments of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub sigma: f64,
    pub x_u: f64,
    pub alpha2: f64,
}

/// Trapezoid moments of `field`. Coordinates are shifted by `center_hint`
/// before integrating to limit cancellation.
pub fn measure_moments(field: &GridField, center_hint: f64) -> Result<Moments> {
    let grid = &field.grid;
    let u = &field.values;
    let sigma = grid.integrate(u);
    let max = field.max_abs();
    if !(sigma > 0.0) || max == 0.0 {
        return Err(Error::InvalidArgument("field has no positive mass".into()));
    }
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-8 * max {
        return Err(Error::InvalidArgument(format!(
            "field is not nonnegative (min {min:e}, max {max:e})"
        )));
    }
    let xs = grid.points();
    let first: Vec<f64> = xs.iter().zip(u).map(|(x, u)| (x - center_hint) * u).collect();
    let shift = grid.integrate(&first) / sigma;
    let x_u = center_hint + shift;
    let second: Vec<f64> = xs.iter().zip(u).map(|(x, u)| (x - x_u) * (x - x_u) * u).collect();
    Ok(Moments {
        sigma,
        x_u,
        alpha2: grid.integrate(&second) / sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crank_nicolson_conserves_trapezoid_mass() {
        let g = Grid::new(-2.0, 2.0, 101).unwrap();
        let mut u = g.sample(|x| (x + 1.5).max(0.0) * (-x * x).exp());
        let m0 = g.integrate(&u);
        let cn = CrankNicolson::new(g.len(), 0.3, g.dx(), 0.01);
        for _ in 0..200 {
            cn.step(&mut u);
        }
        assert!((g.integrate(&u) - m0).abs() < 1e-13);
        assert!(u.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn moments_of_a_gaussian() {
        let g = Grid::new(-15.0, 15.0, 4001).unwrap();
        let d = 0.02;
        let (n, gamma, x0) = (1.0, 1.5, 0.7);
        let f = GridField::from_fn(g, 0.0, None, |x| {
            n * (-(x - x0) * (x - x0) / (2.0 * d * gamma * gamma)).exp()
        });
        let m = measure_moments(&f, 0.0).unwrap();
        let sigma = n * gamma * (2.0 * std::f64::consts::PI * d).sqrt();
        assert!((m.sigma - sigma).abs() < 1e-12);
        assert!((m.x_u - x0).abs() < 1e-12);
        assert!((m.alpha2 - d * gamma * gamma).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_is_rejected() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        assert!(measure_moments(&GridField::zeros(g, 0.0, None), 0.5).is_err());
    }
}
