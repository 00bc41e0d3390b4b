//! Duhamel recursion for the first and second corrections.
//!
//! With zero initial data for the corrections,
//!
//! ```text
//! v1(t) = int_0^t G(t <- tau) [ D^{-1/2} k1 (y - X) v0 ](tau) dtau
//! v2(t) = int_0^t G(t <- tau) [ D^{-1/2} k1 (y - X) v1 + D^{-1} k2 ((y - X)^2 - alpha) v0 ](tau) dtau
//! ```
//!
//! where `X`, `alpha`, `k1`, `k2` are taken from the moment trajectory at `tau`.

use crate::asymptotics::closed::closed_v0_field;
use crate::asymptotics::green::{ConvolutionMethod, GreenKernel};
use crate::asymptotics::order_coeffs;
use crate::asymptotics::quadrature::adaptive_simpson_vec;
use crate::ees::EesTrajectory;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, Grid, GridField};
use crate::model::{CoefficientProvider, GaussianPacket, PhysicalParams};

/// Shared inputs of the correction terms for one quasiparticle.
#[derive(Debug)]
pub struct DuhamelProblem<'a> {
    pub traj: &'a EesTrajectory,
    pub coeffs: &'a dyn CoefficientProvider,
    pub params: PhysicalParams,
    pub packet: GaussianPacket,
    pub s: usize,
    pub grid: Grid,
    pub quad_tol: f64,
    pub method: ConvolutionMethod,
}

/// Panel counts tried by the marching scheme for `v2` before giving up.
const MIN_PANELS: usize = 16;
const MAX_PANELS: usize = 8192;

impl<'a> DuhamelProblem<'a> {
    fn kernel(&self) -> GreenKernel<'a> {
        GreenKernel::new(self.traj, self.s, self.grid, self.method, self.quad_tol)
    }

    fn v0(&self, tau: f64) -> Result<Vec<f64>> {
        Ok(closed_v0_field(&self.packet, self.traj, self.s, &self.grid, tau)?.values)
    }

    /// `D^{-1/2} k1(tau) (y - X(tau)) field(y)`.
    fn drift_source(&self, tau: f64, field: &[f64]) -> Result<Vec<f64>> {
        let st = self.traj.state(tau)?;
        let k1 = order_coeffs(&st, tau, self.coeffs, &self.params)[self.s].k1;
        let c = k1 / self.params.diffusion.sqrt();
        let center = st.x[self.s];
        Ok(self
            .grid
            .points()
            .into_iter()
            .zip(field)
            .map(|(y, f)| c * (y - center) * f)
            .collect())
    }

    /// Source of `v2` at `tau` given `v1(tau)` on the grid.
    fn second_source(&self, tau: f64, v1: &[f64]) -> Result<Vec<f64>> {
        let st = self.traj.state(tau)?;
        let k = order_coeffs(&st, tau, self.coeffs, &self.params)[self.s];
        let d = self.params.diffusion;
        let c1 = k.k1 / d.sqrt();
        let c2 = k.k2 / d;
        let center = st.x[self.s];
        let alpha = st.alpha2[self.s];
        let v0 = self.v0(tau)?;
        Ok(self
            .grid
            .points()
            .into_iter()
            .zip(v1.iter().zip(&v0))
            .map(|(y, (w1, w0))| {
                let dy = y - center;
                c1 * dy * w1 + c2 * (dy * dy - alpha) * w0
            })
            .collect())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < 0.0 || t > self.traj.t_end() {
            return Err(Error::OutOfSpan {
                t,
                start: 0.0,
                end: self.traj.t_end(),
            });
        }
        Ok(())
    }
}

/// First correction by adaptive Simpson over `tau`, each integrand sample
/// being a Green-function application on the grid.
pub fn duhamel_v1(problem: &DuhamelProblem<'_>, t: f64) -> Result<GridField> {
    problem.check_time(t)?;
    if t == 0.0 {
        return Ok(GridField::zeros(problem.grid, t, Some(problem.s)));
    }
    let kernel = problem.kernel();
    let integrand = |tau: f64| -> Result<Vec<f64>> {
        let source = problem.drift_source(tau, &problem.v0(tau)?)?;
        let ratio = problem.traj.sigma_ratio(problem.s, t, tau)?;
        let mut out = kernel.spread(&source, t - tau);
        out.iter_mut().for_each(|v| *v *= ratio);
        Ok(out)
    };
    let grid = problem.grid;
    let norm = move |v: &[f64]| l2_norm(&grid, v);
    let values = adaptive_simpson_vec(&integrand, &norm, 0.0, t, problem.quad_tol)?;
    GridField::new(problem.grid, values, t, Some(problem.s))
}

/// Both corrections at `t` from a marching scheme on `n` uniform panels.
///
/// `v1` is advanced panel by panel (semigroup step plus Simpson on the panel
/// with an analytic midpoint source), then `v2` accumulates composite Simpson
/// weights times propagated sources at the panel nodes.
fn march(
    problem: &DuhamelProblem<'_>,
    kernel: &GreenKernel<'_>,
    t: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    debug_assert!(n % 2 == 0);
    let s = problem.s;
    let traj = problem.traj;
    let h = t / n as f64;
    let node = |j: usize| if j == n { t } else { j as f64 * h };

    let len = problem.grid.len();
    let mut v1 = vec![0.0; len];
    let mut v2_acc = vec![0.0; len];
    let mut src_a = problem.drift_source(0.0, &problem.v0(0.0)?)?;

    for j in 0..=n {
        let tau = node(j);
        // v2 accumulator: acc_j = G(tau_j <- tau_{j-1}) acc_{j-1} + w_j S2(tau_j)
        if j > 0 {
            let ratio = traj.sigma_ratio(s, tau, node(j - 1))?;
            v2_acc = kernel.spread(&v2_acc, tau - node(j - 1));
            v2_acc.iter_mut().for_each(|v| *v *= ratio);
        }
        let w = if j == 0 || j == n {
            h / 3.0
        } else if j % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
        let src2 = problem.second_source(tau, &v1)?;
        for (acc, v) in v2_acc.iter_mut().zip(&src2) {
            *acc += w * v;
        }

        if j == n {
            break;
        }
        // v1 panel step from tau to tau + h.
        let next = node(j + 1);
        let mid = 0.5 * (tau + next);
        let src_m = problem.drift_source(mid, &problem.v0(mid)?)?;
        let src_b = problem.drift_source(next, &problem.v0(next)?)?;
        let ratio_full = traj.sigma_ratio(s, next, tau)?;
        let ratio_half = traj.sigma_ratio(s, next, mid)?;
        let carried: Vec<f64> = v1
            .iter()
            .zip(&src_a)
            .map(|(v, a)| v + (next - tau) / 6.0 * a)
            .collect();
        let carried = kernel.spread(&carried, next - tau);
        let half = kernel.spread(&src_m, next - mid);
        for i in 0..len {
            v1[i] = ratio_full * carried[i]
                + ratio_half * (next - tau) / 6.0 * 4.0 * half[i]
                + (next - tau) / 6.0 * src_b[i];
        }
        src_a = src_b;
    }
    Ok((v1, v2_acc))
}

/// Second correction. Panels are doubled until the Richardson estimate of the
/// Simpson error drops below `quad_tol` relative to the result.
pub fn duhamel_v2(problem: &DuhamelProblem<'_>, t: f64) -> Result<GridField> {
    Ok(duhamel_v1_v2(problem, t)?.1)
}

/// `(v1, v2)` at `t` from the marching scheme.
pub fn duhamel_v1_v2(problem: &DuhamelProblem<'_>, t: f64) -> Result<(GridField, GridField)> {
    problem.check_time(t)?;
    let grid = problem.grid;
    if t == 0.0 {
        return Ok((
            GridField::zeros(grid, t, Some(problem.s)),
            GridField::zeros(grid, t, Some(problem.s)),
        ));
    }
    let kernel = problem.kernel();
    let mut n = MIN_PANELS;
    let mut v2 = march(problem, &kernel, t, n)?.1;
    let mut err = f64::INFINITY;
    while n < MAX_PANELS {
        n *= 2;
        let (v1_fine, v2_fine) = march(problem, &kernel, t, n)?;
        let diff: Vec<f64> = v2_fine.iter().zip(&v2).map(|(a, b)| a - b).collect();
        err = l2_norm(&grid, &diff) / 15.0;
        let scale = l2_norm(&grid, &v2_fine);
        v2 = v2_fine;
        if err <= problem.quad_tol * scale {
            return Ok((
                GridField::new(grid, v1_fine, t, Some(problem.s))?,
                GridField::new(grid, v2, t, Some(problem.s))?,
            ));
        }
    }
    let scale = l2_norm(&grid, &v2);
    Err(Error::Quadrature {
        achieved: if scale > 0.0 { err / scale } else { err },
        requested: problem.quad_tol,
    })
}
