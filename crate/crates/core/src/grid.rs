//! Uniform spatial grids and solution snapshots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[x_min, x_max]` with `n` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 || !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid grid [{x_min}, {x_max}] with {n} points"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|i| self.x_min + i as f64 * dx).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n];
        w[0] = 0.5 * dx;
        w[self.n - 1] = 0.5 * dx;
        w
    }

    /// Trapezoid rule for samples on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let n = values.len();
        let inner = pairwise_sum(&values[1..n - 1]);
        self.dx() * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().into_iter().map(f).collect()
    }
}

/// Pairwise (tree) summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Snapshot of a field on a grid at time `t`. `component` is the quasiparticle
/// index for per-packet fields and `None` for composite ones.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub t: f64,
    pub component: Option<usize>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, t: f64, component: Option<usize>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            t,
            component,
        })
    }

    pub fn zeros(grid: Grid, t: f64, component: Option<usize>) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            t,
            component,
        }
    }

    pub fn from_fn(grid: Grid, t: f64, component: Option<usize>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.sample(f),
            grid,
            t,
            component,
        }
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.grid, &self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn check_compatible(&self, other: &GridField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.t != other.t {
            return Err(Error::GridMismatch(format!(
                "fields have different timestamps ({} vs {})",
                self.t, other.t
            )));
        }
        Ok(())
    }

    /// Interior strict local maxima whose value exceeds `rel_floor * max|u|`.
    /// The floor keeps round-off ripples in the far tails from being counted.
    pub fn local_maxima(&self, rel_floor: f64) -> Vec<usize> {
        let floor = rel_floor * self.max_abs();
        let v = &self.values;
        (1..v.len() - 1)
            .filter(|&i| v[i] > floor && v[i] > v[i - 1] && v[i] >= v[i + 1])
            .collect()
    }

    /// Location of a local maximum refined by a parabola through three points.
    pub fn refined_peak(&self, i: usize) -> f64 {
        let v = &self.values;
        let (l, c, r) = (v[i - 1], v[i], v[i + 1]);
        let denom = l - 2.0 * c + r;
        let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
        self.grid.x(i) + shift * self.grid.dx()
    }
}

pub fn l2_norm(grid: &Grid, values: &[f64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    grid.integrate(&sq).sqrt()
}

/// Distances between two fields on the same grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldDistance {
    pub l2_abs: f64,
    pub l2_rel: f64,
    pub linf: f64,
}

/// Distance of `approx` from `reference`; `l2_rel` is relative to the reference norm.
pub fn distance(approx: &GridField, reference: &GridField) -> Result<FieldDistance> {
    if approx.grid != reference.grid {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let diff: Vec<f64> = approx
        .values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| a - b)
        .collect();
    let l2_abs = l2_norm(&approx.grid, &diff);
    let norm = reference.l2_norm();
    Ok(FieldDistance {
        l2_abs,
        l2_rel: if norm > 0.0 { l2_abs / norm } else { l2_abs },
        linf: diff.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    })
}
