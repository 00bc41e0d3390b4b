//! Heat-kernel Green function of the leading-order operator.
//!
//! ```text
//! G_s(x, y, t, tau) = exp(-(x-y)^2 / (4 D (t-tau))) / (2 sqrt(pi D (t-tau)))
//!                     * sigma_s(t) / sigma_s(tau)
//! ```
//!
//! The growth factor `exp((S_s(t) - S_s(tau)) / D)` equals the mass ratio from
//! the moment trajectory.

use std::f64::consts::PI;

use crate::ees::EesTrajectory;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::spectral::HeatPropagator;

/// How the spatial convolution with the heat kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    /// Spectral multiplication by `exp(-k^2 D dt)` on a zero-padded grid.
    #[default]
    Spectral,
    /// Trapezoid quadrature of the sampled kernel against the field, O(N^2).
    Direct,
}

/// Green function of quasiparticle `s` bound to a trajectory and a grid.
#[derive(Debug)]
pub struct GreenKernel<'a> {
    traj: &'a EesTrajectory,
    s: usize,
    grid: Grid,
    method: ConvolutionMethod,
    mass_tol: f64,
    propagator: Option<HeatPropagator>,
}

/// Result of a Green-function application.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub field: GridField,
    /// Mass lost through the grid boundary exceeded the tolerance.
    pub boundary_warning: bool,
}

impl<'a> GreenKernel<'a> {
    pub fn new(
        traj: &'a EesTrajectory,
        s: usize,
        grid: Grid,
        method: ConvolutionMethod,
        mass_tol: f64,
    ) -> Self {
        let propagator = match method {
            ConvolutionMethod::Spectral => Some(HeatPropagator::new(&grid)),
            ConvolutionMethod::Direct => None,
        };
        Self {
            traj,
            s,
            grid,
            method,
            mass_tol,
            propagator,
        }
    }

    pub fn component(&self) -> usize {
        self.s
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.method
    }

    pub fn trajectory(&self) -> &EesTrajectory {
        self.traj
    }

    pub fn diffusion(&self) -> f64 {
        self.traj.diffusion()
    }

    /// Pointwise kernel value.
    pub fn eval(&self, x: f64, y: f64, t: f64, tau: f64) -> Result<f64> {
        let ratio = self.traj.sigma_ratio(self.s, t, tau)?;
        let s = self.diffusion() * (t - tau);
        Ok(ratio * (-(x - y) * (x - y) / (4.0 * s)).exp() / (2.0 * (PI * s).sqrt()))
    }

    /// Free heat propagation of raw samples over `t - tau`, without the mass factor.
    pub(crate) fn spread(&self, values: &[f64], dt: f64) -> Vec<f64> {
        let s = self.diffusion() * dt;
        if s == 0.0 {
            return values.to_vec();
        }
        match &self.propagator {
            Some(p) => p.apply(values, s),
            None => direct_heat(&self.grid, values, s),
        }
    }

    /// `int G_s(x, y, t, tau) f(y) dy` for `f` given at time `tau`.
    pub fn apply(&self, field: &GridField, t: f64) -> Result<Propagated> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch(
                "field grid differs from the kernel grid".into(),
            ));
        }
        let tau = field.t;
        if t < tau {
            return Err(Error::InvalidArgument(format!(
                "cannot propagate backwards from {tau} to {t}"
            )));
        }
        let ratio = self.traj.sigma_ratio(self.s, t, tau)?;
        let mut values = self.spread(&field.values, t - tau);
        for v in &mut values {
            *v *= ratio;
        }
        let out = GridField::new(self.grid, values, t, Some(self.s))?;

        let abs_mass: f64 = {
            let a: Vec<f64> = field.values.iter().map(|v| v.abs()).collect();
            self.grid.integrate(&a)
        };
        let lost = (out.mass() - ratio * field.mass()).abs();
        let boundary_warning = abs_mass > 0.0 && lost > self.mass_tol * ratio * abs_mass;
        Ok(Propagated {
            field: out,
            boundary_warning,
        })
    }
}

/// `green_apply`: propagates `field` from its timestamp to `t`.
pub fn green_apply(kernel: &GreenKernel<'_>, field: &GridField, t: f64) -> Result<Propagated> {
    kernel.apply(field, t)
}

fn direct_heat(grid: &Grid, values: &[f64], s: f64) -> Vec<f64> {
    let n = grid.len();
    let dx = grid.dx();
    let w = grid.weights();
    let norm = 1.0 / (2.0 * (PI * s).sqrt());
    // exp(-d^2 / 4s) < 1e-125 beyond this reach
    let reach = ((24.0 * s.sqrt()) / dx).ceil() as usize;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            let terms: Vec<f64> = (lo..=hi)
                .map(|j| {
                    let d = (i as f64 - j as f64) * dx;
                    w[j] * values[j] * (-(d * d) / (4.0 * s)).exp()
                })
                .collect();
            norm * crate::grid::pairwise_sum(&terms)
        })
        .collect()
}
