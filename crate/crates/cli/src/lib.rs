//! `fowler`: solve, scan, reconstruct and verify periodic Fowler solutions.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver non-convergence,
//! 3 a verification check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fowler_core::kernel::{eval_k, periodize, DEFAULT_TABLE_TOL};
use fowler_core::radial::from_profile;
use fowler_core::solver::{log_grid, scan_threshold, solve, SolverOptions};
use fowler_core::{Error, Params};
use serde::Serialize;

pub mod solution;
pub mod suites;

use solution::{Provenance, SolutionFile};
use suites::{run_suite, Check, Suite, SuiteInputs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Core(
                Error::InvalidParams { .. } | Error::InvalidArgument(_) | Error::Precondition(_),
            ) => 1,
            CliError::Core(_) | CliError::NonConvergence(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// 17 significant digits, enough for a lossless round trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Parser)]
#[command(
    name = "fowler",
    version,
    about = "Periodic Fowler solutions of psi = K * psi^p"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize the periodic quotient at one period and write a solution file.
    Solve(SolveArgs),
    /// Solve over a log-spaced range of periods and report the symmetry-breaking bracket.
    Scan(ScanArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Map a solution file back to the radial singular solution u(r).
    Reconstruct(ReconstructArgs),
    /// Write K and the periodized kernel on the solver grid.
    KernelDump(KernelDumpArgs),
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub sigma: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<Params, CliError> {
        Ok(Params::new(self.n, self.sigma)?)
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    /// Relative sup-norm step at which the iteration stops.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        if !(self.tol > 0.0) || self.max_iters == 0 || self.grid < 4 {
            return Err(CliError::Usage(
                "need --tol > 0, --max-iters >= 1 and --grid >= 4".into(),
            ));
        }
        Ok(SolverOptions {
            tol_fp: self.tol,
            max_iters: self.max_iters,
            ..SolverOptions::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub period: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Record the wall-clock time in the provenance block.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub t_min: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, requires = "sigma")]
    pub n: Option<u32>,
    #[arg(long, requires = "n")]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    /// Solution file for the pohozaev suite.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Monte Carlo seed; drawn from the OS when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<u64>,
    /// JSON report destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub r_min: f64,
    /// Samples per log-period.
    #[arg(long, default_value_t = fowler_core::radial::DEFAULT_SAMPLES_PER_PERIOD)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelDumpArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub period: f64,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Scan(args) => cmd_scan(&args, out),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Reconstruct(args) => cmd_reconstruct(&args, out),
        Command::KernelDump(args) => cmd_kernel_dump(&args, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

fn write_or_emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => emit(out, text),
    }
}

fn unix_time() -> Option<u64> {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.params()?;
    let opts = args.solver.options()?;
    let table = periodize(&params, args.period, args.solver.grid, DEFAULT_TABLE_TOL)?;
    let (sol, failure) = match solve(&table, &opts) {
        Ok(sol) => (sol, None),
        Err(e) => match e.partial_solution() {
            Some(best) => (best.clone(), Some(e.to_string())),
            None => return Err(e.into()),
        },
    };
    let provenance = Provenance {
        tol_fp: opts.tol_fp,
        table_tol: DEFAULT_TABLE_TOL,
        max_iters: opts.max_iters,
        iterations: sol.iterations,
        converged: failure.is_none(),
        status: failure.clone().unwrap_or_else(|| "converged".into()),
        timestamp: if args.timestamp { unix_time() } else { None },
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    SolutionFile::from_solution(&params, &sol, provenance).write(&args.out)?;
    emit(
        out,
        &format!(
            "T={} J={} variant={} residual={}\n",
            fmt_float(args.period),
            fmt_float(sol.j_value),
            sol.variant,
            fmt_float(sol.el_residual)
        ),
    )?;
    match failure {
        Some(msg) => Err(CliError::NonConvergence(msg)),
        None => Ok(()),
    }
}

pub fn cmd_scan(args: &ScanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.params()?;
    let opts = args.solver.options()?;
    if !(args.t_min > 0.0 && args.t_min < args.t_max && args.t_max.is_finite()) || args.steps < 2 {
        return Err(CliError::Usage(format!(
            "need 0 < --t-min < --t-max and --steps >= 2 (got {}, {}, {})",
            args.t_min, args.t_max, args.steps
        )));
    }
    let periods = log_grid(args.t_min, args.t_max, args.steps)?;
    let scan = scan_threshold(
        &params,
        &periods,
        args.solver.grid,
        DEFAULT_TABLE_TOL,
        &opts,
    )?;
    let mut csv = String::from("T,J_const,J_max,variant\n");
    for row in &scan.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_float(row.period),
            fmt_float(row.j_const),
            fmt_float(row.j_max),
            row.variant
        );
    }
    write_or_emit(args.out.as_deref(), &csv, out)?;
    let summary = match scan.threshold() {
        Ok((a, b, _)) => format!("T* in [{},{}]\n", fmt_float(a), fmt_float(b)),
        Err(_) => "no transition in range\n".to_owned(),
    };
    emit(out, &summary)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    suite: Suite,
    passed: bool,
    checks: &'a [Check],
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = match (args.n, args.sigma) {
        (Some(n), Some(s)) => Some(Params::new(n, s)?),
        _ => None,
    };
    if args.solution.is_some() && !matches!(args.suite, Suite::Pohozaev | Suite::All) {
        return Err(CliError::Usage(
            "--solution is only used by the pohozaev suite".into(),
        ));
    }
    let solution = args
        .solution
        .as_deref()
        .map(SolutionFile::read)
        .transpose()?;
    let inputs = SuiteInputs {
        params,
        period: args.period,
        solution,
        seed: args.seed.unwrap_or_else(rand::random),
        samples: args.samples,
    };
    let checks = run_suite(args.suite, &inputs)?;
    let mut text = String::new();
    for c in &checks {
        let _ = writeln!(text, "{}", c.line());
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    emit(out, &text)?;
    if let Some(path) = &args.out {
        let report = VerifyReport {
            suite: args.suite,
            passed: failures == 0,
            checks: &checks,
        };
        let mut json = serde_json::to_string_pretty(&report).expect("reports always serialize");
        json.push('\n');
        fs::write(path, json)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    if failures > 0 {
        return Err(CliError::Verification(failures));
    }
    Ok(())
}

pub fn cmd_reconstruct(args: &ReconstructArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = SolutionFile::read(&args.solution)?;
    let params = file.params()?;
    let field = from_profile(&params, &file.profile()?, args.r_min, args.samples)?;
    let a = params.decay_rate();
    let mut csv = String::from("r,u,psi_of_log_r\n");
    for (t, u) in field.log_radii().iter().zip(field.u_values()) {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_float(t.exp()),
            fmt_float(*u),
            fmt_float(u * (a * t).exp())
        );
    }
    write_or_emit(args.out.as_deref(), &csv, out)
}

pub fn cmd_kernel_dump(args: &KernelDumpArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.params.params()?;
    let table = periodize(&params, args.period, args.grid, DEFAULT_TABLE_TOL)?;
    let h = table.spacing();
    let mut csv = String::from("t,K,K_T\n");
    // lag 0 holds a regularized cell weight rather than a kernel value
    for (j, kt) in table.lag_values().iter().enumerate().skip(1) {
        let t = j as f64 * h;
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_float(t),
            fmt_float(eval_k(&params, t)?),
            fmt_float(*kt)
        );
    }
    write_or_emit(args.out.as_deref(), &csv, out)
}
