//! Equation data: coefficients with analytic derivatives, physical parameters,
//! initial Gaussian packets and the scenario file.
//!
//! The equation being modelled is
//!
//! ```text
//! u_t = D u_xx + a(x,t) u - kappa u(x,t) * int b(x,y,t) u(y,t) dy
//! ```
//!
//! Coefficient providers supply `a`, `b` and their partial derivatives up to
//! total order two, which is all the second-order moment system needs.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Number of quasiparticles carried by a scenario.
pub const N_PACKETS: usize = 2;

/// Reproduction rate `a(x,t)` and influence kernel `b(x,y,t)` with their
/// spatial partial derivatives.
///
/// This is the extension point for user-defined coefficients. Implementations
/// must be pure; evaluations happen concurrently from worker threads.
pub trait CoefficientProvider: Send + Sync + std::fmt::Debug {
    fn a(&self, x: f64, t: f64) -> f64;

    /// `d^order a / dx^order` for `order` in `0..=2`.
    fn a_dx(&self, order: u8, x: f64, t: f64) -> f64;

    fn b(&self, x: f64, y: f64, t: f64) -> f64;

    /// `d^(kx+ky) b / dx^kx dy^ky` for `kx + ky <= 2`.
    fn b_dxy(&self, kx: u8, ky: u8, x: f64, y: f64, t: f64) -> f64;

    /// `b(x,y,t)` depends on `x - y` only.
    fn translation_invariant(&self) -> bool;

    /// `a` and `b` do not depend on `t`. Lets solvers cache kernel spectra.
    fn time_independent(&self) -> bool {
        false
    }
}

fn check_a_order(order: u8) {
    assert!(order <= 2, "a_dx supports derivative orders 0..=2, got {order}");
}

fn check_b_order(kx: u8, ky: u8) {
    assert!(
        kx + ky <= 2,
        "b_dxy supports total derivative order <= 2, got ({kx}, {ky})"
    );
}

/// `a(x,t) = a0`, `b = 1`. The integrable case with a closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoeffs {
    pub a0: f64,
}

impl CoefficientProvider for ConstantCoeffs {
    fn a(&self, _x: f64, _t: f64) -> f64 {
        self.a0
    }

    fn a_dx(&self, order: u8, _x: f64, _t: f64) -> f64 {
        check_a_order(order);
        if order == 0 {
            self.a0
        } else {
            0.0
        }
    }

    fn b(&self, _x: f64, _y: f64, _t: f64) -> f64 {
        1.0
    }

    fn b_dxy(&self, kx: u8, ky: u8, _x: f64, _y: f64, _t: f64) -> f64 {
        check_b_order(kx, ky);
        if kx + ky == 0 {
            1.0
        } else {
            0.0
        }
    }

    fn translation_invariant(&self) -> bool {
        true
    }

    fn time_independent(&self) -> bool {
        true
    }
}

/// Gaussian influence kernel `b(x,y) = exp(-(x-y)^2 / zeta^2)`.
///
/// Derivatives in terms of the separation `d = x - y`:
/// `b_x = -2d/zeta^2 b`, `b_y = -b_x`, `b_xx = b_yy = (4d^2/zeta^4 - 2/zeta^2) b`,
/// `b_xy = -b_xx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    pub zeta: f64,
}

impl GaussianKernel {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel width zeta must be positive, got {zeta}"
            )));
        }
        Ok(Self { zeta })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        (-(d * d) / (self.zeta * self.zeta)).exp()
    }

    pub fn partial(&self, kx: u8, ky: u8, x: f64, y: f64) -> f64 {
        check_b_order(kx, ky);
        let z2 = self.zeta * self.zeta;
        let d = x - y;
        let b = self.eval(x, y);
        match (kx, ky) {
            (0, 0) => b,
            (1, 0) => -2.0 * d / z2 * b,
            (0, 1) => 2.0 * d / z2 * b,
            (2, 0) | (0, 2) => (4.0 * d * d / (z2 * z2) - 2.0 / z2) * b,
            (1, 1) => (2.0 / z2 - 4.0 * d * d / (z2 * z2)) * b,
            _ => unreachable!(),
        }
    }
}

/// Constant reproduction rate with a Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernelCoeffs {
    pub a0: f64,
    pub kernel: GaussianKernel,
}

impl CoefficientProvider for GaussianKernelCoeffs {
    fn a(&self, _x: f64, _t: f64) -> f64 {
        self.a0
    }

    fn a_dx(&self, order: u8, _x: f64, _t: f64) -> f64 {
        check_a_order(order);
        if order == 0 {
            self.a0
        } else {
            0.0
        }
    }

    fn b(&self, x: f64, y: f64, _t: f64) -> f64 {
        self.kernel.eval(x, y)
    }

    fn b_dxy(&self, kx: u8, ky: u8, x: f64, y: f64, _t: f64) -> f64 {
        self.kernel.partial(kx, ky, x, y)
    }

    fn translation_invariant(&self) -> bool {
        true
    }

    fn time_independent(&self) -> bool {
        true
    }
}

/// `a(x) = 1 - (x/c)^2` (reproduction confined to `|x| < c`) with a Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticRateCoeffs {
    pub c: f64,
    pub kernel: GaussianKernel,
}

impl CoefficientProvider for QuadraticRateCoeffs {
    fn a(&self, x: f64, _t: f64) -> f64 {
        let r = x / self.c;
        1.0 - r * r
    }

    fn a_dx(&self, order: u8, x: f64, t: f64) -> f64 {
        check_a_order(order);
        let c2 = self.c * self.c;
        match order {
            0 => self.a(x, t),
            1 => -2.0 * x / c2,
            _ => -2.0 / c2,
        }
    }

    fn b(&self, x: f64, y: f64, _t: f64) -> f64 {
        self.kernel.eval(x, y)
    }

    fn b_dxy(&self, kx: u8, ky: u8, x: f64, y: f64, _t: f64) -> f64 {
        self.kernel.partial(kx, ky, x, y)
    }

    fn translation_invariant(&self) -> bool {
        true
    }

    fn time_independent(&self) -> bool {
        true
    }
}

pub fn builtin_constant_coeffs(a0: f64) -> ConstantCoeffs {
    ConstantCoeffs { a0 }
}

pub fn builtin_gaussian_kernel(zeta: f64, a0: f64) -> Result<GaussianKernelCoeffs> {
    Ok(GaussianKernelCoeffs {
        a0,
        kernel: GaussianKernel::new(zeta)?,
    })
}

pub fn builtin_quadratic_rate(c: f64, zeta: f64) -> Result<QuadraticRateCoeffs> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rate width c must be positive, got {c}"
        )));
    }
    Ok(QuadraticRateCoeffs {
        c,
        kernel: GaussianKernel::new(zeta)?,
    })
}

/// Diffusion coefficient `D` and nonlinearity `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    #[serde(rename = "D")]
    pub diffusion: f64,
    pub kappa: f64,
}

impl PhysicalParams {
    pub fn new(diffusion: f64, kappa: f64) -> Result<Self> {
        let p = Self { diffusion, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion > 0.0 && self.diffusion.is_finite()) {
            return Err(Error::Config(format!(
                "params.D: diffusion must be positive, got {}",
                self.diffusion
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!(
                "params.kappa: must be nonnegative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Initial packet `phi(x) = N exp(-(x - x0)^2 / (2 D gamma^2))`.
///
/// Its mass is `N gamma sqrt(2 pi D)` and its variance `D gamma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacket {
    #[serde(rename = "N")]
    pub amplitude: f64,
    pub gamma: f64,
    pub x0: f64,
}

impl GaussianPacket {
    pub fn new(amplitude: f64, gamma: f64, x0: f64) -> Result<Self> {
        let p = Self { amplitude, gamma, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "packet N must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "packet gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::Config("packet x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, diffusion: f64) -> f64 {
        let dx = x - self.x0;
        self.amplitude * (-(dx * dx) / (2.0 * diffusion * self.gamma * self.gamma)).exp()
    }

    /// `sigma(0) = N gamma sqrt(2 pi D)`.
    pub fn mass(&self, diffusion: f64) -> f64 {
        self.amplitude * self.gamma * (2.0 * PI * diffusion).sqrt()
    }

    /// Second central moment `D gamma^2`.
    pub fn variance(&self, diffusion: f64) -> f64 {
        diffusion * self.gamma * self.gamma
    }
}

/// Serialized coefficient choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoeffSpec {
    Constant { a0: f64 },
    GaussianKernel { a0: f64, zeta: f64 },
    QuadraticRate { c: f64, zeta: f64 },
}

impl CoeffSpec {
    pub fn build(&self) -> Result<Arc<dyn CoefficientProvider>> {
        Ok(match *self {
            CoeffSpec::Constant { a0 } => Arc::new(builtin_constant_coeffs(a0)),
            CoeffSpec::GaussianKernel { a0, zeta } => Arc::new(builtin_gaussian_kernel(zeta, a0)?),
            CoeffSpec::QuadraticRate { c, zeta } => Arc::new(builtin_quadratic_rate(c, zeta)?),
        })
    }

    /// Reproduction rate for the closed-form solution, if the coefficients are
    /// constant (`a = a0`, `b = 1`).
    pub fn constant_rate(&self) -> Option<f64> {
        match *self {
            CoeffSpec::Constant { a0 } => Some(a0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.n_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    pub n_samples: usize,
}

fn default_ode_tol() -> f64 {
    1e-9
}

fn default_quad_tol() -> f64 {
    1e-8
}

fn default_dt_safety() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_ode_tol")]
    pub ode_tol: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_dt_safety")]
    pub pde_dt_safety: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode_tol: default_ode_tol(),
            quad_tol: default_quad_tol(),
            pde_dt_safety: default_dt_safety(),
        }
    }
}

/// A full experiment description, loaded from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub id: String,
    pub params: PhysicalParams,
    pub coeffs: CoeffSpec,
    pub packets: Vec<GaussianPacket>,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Config(format!(
                "{} at line {} column {} (field `{}`)",
                inner,
                inner.line(),
                inner.column(),
                e.path()
            ))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.coeffs.build()?;
        if self.packets.len() != N_PACKETS {
            return Err(Error::Config(format!(
                "packets: exactly {N_PACKETS} packets are required, got {}",
                self.packets.len()
            )));
        }
        for (i, p) in self.packets.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::Config(format!("packets[{i}]: {e}")))?;
        }
        if self.grid.n_points < 64 {
            return Err(Error::Config(format!(
                "grid.n_points: at least 64 points are required, got {}",
                self.grid.n_points
            )));
        }
        if !(self.grid.x_min < self.grid.x_max) {
            return Err(Error::Config("grid: x_min must be below x_max".into()));
        }
        for (i, p) in self.packets.iter().enumerate() {
            if !(self.grid.x_min < p.x0 && p.x0 < self.grid.x_max) {
                return Err(Error::Config(format!(
                    "packets[{i}].x0 = {} lies outside the grid",
                    p.x0
                )));
            }
        }
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return Err(Error::Config("time.t_end must be positive".into()));
        }
        if self.time.n_samples < 2 {
            return Err(Error::Config("time.n_samples must be at least 2".into()));
        }
        let tol = &self.tolerances;
        if !(tol.ode_tol > 0.0 && tol.quad_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(tol.pde_dt_safety > 0.0 && tol.pde_dt_safety <= 1.0) {
            return Err(Error::Config(
                "tolerances.pde_dt_safety must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Arc<dyn CoefficientProvider> {
        self.coeffs
            .build()
            .expect("coefficients validated at construction")
    }

    pub fn grid(&self) -> Grid {
        self.grid.grid().expect("grid validated at construction")
    }

    pub fn packets(&self) -> [GaussianPacket; N_PACKETS] {
        [self.packets[0], self.packets[1]]
    }

    pub fn initial_masses(&self) -> [f64; N_PACKETS] {
        let d = self.params.diffusion;
        [self.packets[0].mass(d), self.packets[1].mass(d)]
    }

    /// The same experiment with a different diffusion coefficient.
    pub fn with_diffusion(&self, diffusion: f64) -> Result<Self> {
        let mut s = self.clone();
        s.params.diffusion = diffusion;
        s.validate()?;
        Ok(s)
    }

    pub fn with_grid_points(&self, n_points: usize) -> Result<Self> {
        let mut s = self.clone();
        s.grid.n_points = n_points;
        s.validate()?;
        Ok(s)
    }

    /// Swaps the two packets.
    pub fn swapped(&self) -> Self {
        let mut s = self.clone();
        s.packets.swap(0, 1);
        s
    }
}
