//! FFT helpers on zero-padded uniform grids: exact heat-semigroup propagation
//! and linear convolution with a translation-invariant kernel.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

struct Plans {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn padded(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(values) {
            b.re = v;
        }
        buf
    }
}

impl std::fmt::Debug for Plans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plans").field("len", &self.len).finish()
    }
}

/// Applies the free heat semigroup `exp(s d^2/dx^2)` to grid samples by
/// multiplying their spectrum by `exp(-k^2 s)`.
///
/// The field is zero-padded to at least twice its length so mass leaving the
/// grid does not wrap around onto the other side before truncation.
#[derive(Debug)]
pub struct HeatPropagator {
    n: usize,
    plans: Plans,
    k2: Vec<f64>,
}

impl HeatPropagator {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let len = (2 * n).next_power_of_two();
        let two_pi_over_l = 2.0 * std::f64::consts::PI / (len as f64 * grid.dx());
        let k2 = (0..len)
            .map(|j| {
                let m = if j <= len / 2 {
                    j as f64
                } else {
                    j as f64 - len as f64
                };
                let k = m * two_pi_over_l;
                k * k
            })
            .collect();
        Self {
            n,
            plans: Plans::new(len),
            k2,
        }
    }

    /// Propagates `values` over the "diffusion time" `s = D * (t - tau)`.
    pub fn apply(&self, values: &[f64], s: f64) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.n);
        if s == 0.0 {
            return values.to_vec();
        }
        let mut buf = self.plans.padded(values);
        self.plans.forward.process(&mut buf);
        for (b, &k2) in buf.iter_mut().zip(&self.k2) {
            *b *= (-k2 * s).exp();
        }
        self.plans.inverse.process(&mut buf);
        let scale = 1.0 / self.plans.len as f64;
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }
}

/// Computes `c_i = sum_j K(x_i - x_j) w_j u_j` for a kernel depending on the
/// separation only, with trapezoid weights `w_j`.
#[derive(Debug)]
pub struct KernelConvolver {
    n: usize,
    plans: Plans,
    kernel_hat: Vec<Complex64>,
    weights: Vec<f64>,
}

impl KernelConvolver {
    /// `kernel(d)` is evaluated at the lags `d = m dx`, `|m| < n`.
    pub fn new(grid: &Grid, kernel: impl Fn(f64) -> f64) -> Self {
        let n = grid.len();
        let len = (2 * n - 1).next_power_of_two();
        let dx = grid.dx();
        let plans = Plans::new(len);
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); len];
        kernel_hat[0].re = kernel(0.0);
        for m in 1..n {
            kernel_hat[m].re = kernel(m as f64 * dx);
            kernel_hat[len - m].re = kernel(-(m as f64) * dx);
        }
        plans.forward.process(&mut kernel_hat);
        Self {
            n,
            plans,
            kernel_hat,
            weights: grid.weights(),
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.n);
        let weighted: Vec<f64> = values.iter().zip(&self.weights).map(|(u, w)| u * w).collect();
        let mut buf = self.plans.padded(&weighted);
        self.plans.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.plans.inverse.process(&mut buf);
        let scale = 1.0 / self.plans.len as f64;
        buf[..self.n].iter().map(|c| c.re * scale).collect()
    }
}
