//! Asymptotic versus numerical comparison runs.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticSnapshot, AsymptoticSolver};
use crate::ees::{solve_scenario_until, EesOrder, EesState, EesTrajectory};
use crate::error::{Error, Result};
use crate::grid::{distance, GridField};
use crate::model::{PhysicalParams, Scenario};
use crate::pde::{
    measure_moments, solve_fkppds, DecompositionSolution, Moments, PdeDiagnostics, PdeSolverConfig,
};

/// Distance between `u^(K)` and the numerical solution at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub t: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub l2_abs: f64,
    pub l2_rel: f64,
    pub linf: f64,
}

/// Moments predicted by the moment system next to those measured on the
/// decomposition solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub t: f64,
    pub s: usize,
    pub ees: Moments,
    pub measured: Moments,
    pub sigma_rel: f64,
    pub x_abs: f64,
    pub alpha2_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub ees_seconds: f64,
    pub asymptotic_seconds: f64,
    pub pde_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_id: String,
    #[serde(rename = "K_max")]
    pub k_max: usize,
    pub times: Vec<f64>,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub distances: Vec<DistanceEntry>,
    pub moments: Vec<MomentEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pde: Option<PdeDiagnostics>,
    pub runtime: RuntimeStats,
}

impl ComparisonReport {
    fn empty(scenario: &Scenario, k_max: usize, times: &[f64]) -> Self {
        Self {
            scenario_id: scenario.id.clone(),
            k_max,
            times: times.to_vec(),
            status: RunStatus::Ok,
            error: None,
            distances: Vec::new(),
            moments: Vec::new(),
            pde: None,
            runtime: RuntimeStats::default(),
        }
    }

    pub fn distance(&self, t: f64, k: usize) -> Option<&DistanceEntry> {
        self.distances.iter().find(|d| d.t == t && d.k == k)
    }

    /// `L2_rel(K=2) <= L2_rel(K=0)` at every time, when both are present.
    pub fn higher_order_not_worse(&self) -> bool {
        self.times
            .iter()
            .all(|&t| match (self.distance(t, 0), self.distance(t, self.k_max)) {
                (Some(a), Some(b)) => b.l2_rel <= a.l2_rel,
                _ => true,
            })
    }
}

/// Everything produced by a comparison run.
#[derive(Debug)]
pub struct ComparisonRun {
    pub trajectory: EesTrajectory,
    pub asymptotic: Vec<AsymptoticSnapshot>,
    /// `u_1 + u_2` from the decomposition system, the numerical reference.
    pub numerical: Vec<GridField>,
    pub decomposition: DecompositionSolution,
    pub params: PhysicalParams,
    pub report: ComparisonReport,
}

impl ComparisonRun {
    /// `u^(k)` at the `i`-th sample time.
    pub fn composite(&self, i: usize, k: usize) -> Result<GridField> {
        self.asymptotic[i].composite(k, &self.params)
    }
}

fn moments_of(state: &EesState, s: usize) -> Moments {
    Moments {
        sigma: state.sigma[s],
        x_u: state.x[s],
        alpha2: state.alpha2[s],
    }
}

/// Runs the moment system, the asymptotic construction up to `k_max` and the
/// reference solver at `times`, and measures their distances.
///
/// On failure the partially filled report is returned inside the error
/// variant so callers can still flush it.
#[allow(clippy::result_large_err)]
pub fn run_comparison(
    scenario: &Scenario,
    config: &PdeSolverConfig,
    times: &[f64],
    k_max: usize,
) -> std::result::Result<ComparisonRun, (Error, ComparisonReport)> {
    let mut report = ComparisonReport::empty(scenario, k_max, times);
    let fail = |e: Error, mut report: ComparisonReport| {
        report.status = RunStatus::Failed;
        report.error = Some(e.to_string());
        (e, report)
    };
    if k_max > crate::asymptotics::MAX_ORDER {
        let e = Error::InvalidArgument(format!("K = {k_max} exceeds 2"));
        return Err(fail(e, report));
    }
    let start = Instant::now();
    let t_max = times.iter().cloned().fold(scenario.time.t_end, f64::max);
    let trajectory = match solve_scenario_until(scenario, EesOrder::Two, t_max) {
        Ok(t) => t,
        Err(e) => return Err(fail(e, report)),
    };
    report.runtime.ees_seconds = start.elapsed().as_secs_f64();

    let coeffs = scenario.coefficients();
    let (asym, pde) = rayon::join(
        || {
            let t0 = Instant::now();
            let solver = AsymptoticSolver::new(scenario, &trajectory, coeffs.as_ref());
            solver
                .solve(times, k_max)
                .map(|r| (r, t0.elapsed().as_secs_f64()))
        },
        || {
            let t0 = Instant::now();
            solve_fkppds(scenario, config, times).map(|r| (r, t0.elapsed().as_secs_f64()))
        },
    );
    let (decomposition, pde_secs) = match pde {
        Ok(v) => v,
        Err(e) => return Err(fail(e, report)),
    };
    report.runtime.pde_seconds = pde_secs;
    report.pde = Some(decomposition.diagnostics);
    let numerical = match decomposition.totals() {
        Ok(v) => v,
        Err(e) => return Err(fail(e, report)),
    };

    // Moment residuals do not depend on the asymptotic terms.
    for (pair, &t) in decomposition.components.iter().zip(times) {
        let state = match trajectory.state(t) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, report)),
        };
        for (s, component) in pair.iter().enumerate() {
            let measured = match measure_moments(component, state.x[s]) {
                Ok(m) => m,
                Err(e) => return Err(fail(e, report)),
            };
            let ees = moments_of(&state, s);
            report.moments.push(MomentEntry {
                t,
                s,
                ees,
                measured,
                sigma_rel: (ees.sigma - measured.sigma).abs() / measured.sigma,
                x_abs: (ees.x_u - measured.x_u).abs(),
                alpha2_rel: (ees.alpha2 - measured.alpha2).abs() / measured.alpha2,
            });
        }
    }

    let (asymptotic, asym_secs) = match asym {
        Ok(v) => v,
        Err(e) => return Err(fail(e, report)),
    };
    report.runtime.asymptotic_seconds = asym_secs;
    for (snap, num) in asymptotic.iter().zip(&numerical) {
        for k in 0..=k_max {
            let d = snap
                .composite(k, &scenario.params)
                .and_then(|u| distance(&u, num));
            match d {
                Ok(d) => report.distances.push(DistanceEntry {
                    t: snap.t,
                    k,
                    l2_abs: d.l2_abs,
                    l2_rel: d.l2_rel,
                    linf: d.linf,
                }),
                Err(e) => return Err(fail(e, report)),
            }
        }
    }
    report.runtime.total_seconds = start.elapsed().as_secs_f64();
    Ok(ComparisonRun {
        trajectory,
        asymptotic,
        numerical,
        decomposition,
        params: scenario.params,
        report,
    })
}
