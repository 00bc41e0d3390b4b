//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::asymptotics::{exact_constant_field, AsymptoticSolver};
use crate::compare::run_comparison;
use crate::ees::{solve_scenario, EesOrder};
use crate::error::{Error, Result};
use crate::io::{write_json, SnapshotKind, SnapshotWriter};
use crate::model::Scenario;
use crate::pde::{solve_fkpp, NonlocalMethod, PdeSolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ASSERT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "quasifkpp",
    version,
    about = "Quasiparticle asymptotics for the nonlocal Fisher-KPP equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the moment system and write trajectory.csv.
    SolveEes(EesArgs),
    /// Build u^(K) on the grid and write one CSV per time and order.
    SolveAsymptotic(AsymptoticArgs),
    /// Run the finite-difference reference solver.
    SolvePde(PdeArgs),
    /// Compare u^(0..K) with the reference solution; writes report.json.
    Compare(CompareArgs),
    /// Evaluate the closed-form solution of the constant-coefficient case.
    Exact(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated sample times; defaults to the scenario's uniform samples.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the number of grid points.
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,
    /// Override the ODE and quadrature tolerances.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Args)]
pub struct EesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Moment system order.
    #[arg(long, value_enum, default_value = "2")]
    pub order: OrderArg,
}

#[derive(Debug, Args)]
pub struct AsymptoticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Highest asymptotic order.
    #[arg(long = "K", default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub k: u8,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NonlocalArg {
    Fft,
    Direct,
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Nonlocal term evaluation; FFT by default when the kernel allows it.
    #[arg(long, value_enum)]
    pub nonlocal: Option<NonlocalArg>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Highest asymptotic order.
    #[arg(long = "K", default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub k: u8,
    /// Exit with status 4 unless u^(K) is at least as close as u^(0) at every time.
    #[arg(long = "assert")]
    pub assert: bool,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_SOLVER
            }
        }
    }
}

fn load(common: &CommonArgs) -> Result<Scenario> {
    let mut scenario = Scenario::load(&common.scenario)?;
    if let Some(n) = common.grid_points {
        scenario = scenario.with_grid_points(n)?;
    }
    if let Some(tol) = common.tol {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("--tol must be positive, got {tol}")));
        }
        scenario.tolerances.ode_tol = tol;
        scenario.tolerances.quad_tol = tol;
    }
    Ok(scenario)
}

fn sample_times(common: &CommonArgs, scenario: &Scenario) -> Result<Vec<f64>> {
    let times = match &common.times {
        Some(t) => t.clone(),
        None => {
            let n = scenario.time.n_samples;
            (0..n)
                .map(|i| scenario.time.t_end * i as f64 / (n - 1) as f64)
                .collect()
        }
    };
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Config(
            "--times must list finite nonnegative values".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("--times must be nondecreasing".into()));
    }
    Ok(times)
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::SolveEes(args) => cmd_solve_ees(&args, stdout),
        Command::SolveAsymptotic(args) => cmd_solve_asymptotic(&args, stdout),
        Command::SolvePde(args) => cmd_solve_pde(&args, stdout),
        Command::Compare(args) => cmd_compare(&args, stdout),
        Command::Exact(args) => cmd_exact(&args, stdout),
    }
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn cmd_solve_ees(args: &EesArgs, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(&args.common)?;
    let order = match args.order {
        OrderArg::Zero => EesOrder::Zero,
        OrderArg::Two => EesOrder::Two,
    };
    let traj = solve_scenario(&scenario, order)?;
    create_out(&args.common.out)?;
    let path = args.common.out.join("trajectory.csv");
    let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    traj.write_csv(file, scenario.time.n_samples)?;
    let end = traj.state(traj.t_end())?;
    writeln!(
        stdout,
        "t = {}: X = ({:.6}, {:.6}), sigma = ({:.6e}, {:.6e}), alpha2 = ({:.6e}, {:.6e})",
        traj.t_end(),
        end.x[0],
        end.x[1],
        end.sigma[0],
        end.sigma[1],
        end.alpha2[0],
        end.alpha2[1]
    )?;
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

pub fn cmd_solve_asymptotic(args: &AsymptoticArgs, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(&args.common)?;
    let times = sample_times(&args.common, &scenario)?;
    let t_max = times.iter().cloned().fold(scenario.time.t_end, f64::max);
    let traj = crate::ees::solve_scenario_until(&scenario, EesOrder::Two, t_max)?;
    let coeffs = scenario.coefficients();
    let solver = AsymptoticSolver::new(&scenario, &traj, coeffs.as_ref());
    let k_max = args.k as usize;
    let snaps = solver.solve(&times, k_max)?;
    let mut writer = SnapshotWriter::new(&args.common.out)?;
    for snap in &snaps {
        for k in 0..=k_max {
            writer.add(
                &snap.composite(k, &scenario.params)?,
                SnapshotKind::Asymptotic,
                Some(k),
            )?;
        }
    }
    let n = writer.finish()?.len();
    writeln!(stdout, "wrote {n} snapshots to {}", args.common.out.display())?;
    Ok(EXIT_OK)
}

pub fn cmd_solve_pde(args: &PdeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(&args.common)?;
    let times = sample_times(&args.common, &scenario)?;
    let mut config = PdeSolverConfig::from_scenario(&scenario);
    match args.nonlocal {
        Some(NonlocalArg::Fft) => config.nonlocal_method = NonlocalMethod::FftConvolution,
        Some(NonlocalArg::Direct) => config.nonlocal_method = NonlocalMethod::DirectQuadrature,
        None => {}
    }
    let sol = solve_fkpp(&scenario, &config, &times)?;
    let mut writer = SnapshotWriter::new(&args.common.out)?;
    for f in &sol.fields {
        writer.add(f, SnapshotKind::Numerical, None)?;
    }
    writer.finish()?;
    write_json(&args.common.out.join("diagnostics.json"), &sol.diagnostics)?;
    if sol.diagnostics.boundary_leak {
        writeln!(
            stdout,
            "warning: solution reaches the grid boundary; widen the domain"
        )?;
    }
    writeln!(
        stdout,
        "{} steps of dt = {:e}; wrote {}",
        sol.diagnostics.steps,
        sol.diagnostics.dt_used,
        args.common.out.display()
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(&args.common)?;
    let times = sample_times(&args.common, &scenario)?;
    let config = PdeSolverConfig::from_scenario(&scenario);
    let k_max = args.k as usize;
    create_out(&args.common.out)?;
    let report_path = args.common.out.join("report.json");
    let run = match run_comparison(&scenario, &config, &times, k_max) {
        Ok(run) => run,
        Err((e, report)) => {
            write_json(&report_path, &report)?;
            return Err(e);
        }
    };
    let mut writer = SnapshotWriter::new(&args.common.out)?;
    for (i, num) in run.numerical.iter().enumerate() {
        for k in 0..=k_max {
            writer.add(&run.composite(i, k)?, SnapshotKind::Asymptotic, Some(k))?;
        }
        writer.add(num, SnapshotKind::Numerical, None)?;
    }
    writer.finish()?;
    write_json(&report_path, &run.report)?;
    for d in &run.report.distances {
        writeln!(
            stdout,
            "t = {:<6} K = {}  L2_rel = {:.3e}  Linf = {:.3e}",
            d.t, d.k, d.l2_rel, d.linf
        )?;
    }
    writeln!(stdout, "wrote {}", report_path.display())?;
    if args.assert && !run.report.higher_order_not_worse() {
        writeln!(
            stdout,
            "assertion failed: L2_rel(K={k_max}) exceeds L2_rel(K=0) at some time"
        )?;
        return Ok(EXIT_ASSERT);
    }
    Ok(EXIT_OK)
}

pub fn cmd_exact(args: &CommonArgs, stdout: &mut dyn Write) -> Result<i32> {
    let scenario = load(args)?;
    let times = sample_times(args, &scenario)?;
    let grid = scenario.grid();
    let fields = times
        .iter()
        .map(|&t| exact_constant_field(&scenario, &grid, t))
        .collect::<Result<Vec<_>>>()?;
    let mut writer = SnapshotWriter::new(&args.out)?;
    for f in &fields {
        writer.add(f, SnapshotKind::Exact, None)?;
    }
    let n = writer.finish()?.len();
    writeln!(stdout, "wrote {n} snapshots to {}", args.out.display())?;
    Ok(EXIT_OK)
}
