//! `tracecone`: evaluate the barrier at a point, run the verifier suite, or
//! solve a conic problem. Every input and output is JSON.
//!
//! Exit codes: 0 success, 1 check or solve failure, 2 usage, parse or
//! configuration error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tracecone::cone::{interior_status, zeta, BarrierPoint, ConePoint};
use tracecone::solver::{solve, ConicProblem, SolveConfig, SolveStatus};
use tracecone::verifier::{check_barrier_parameter, euler_residuals, run_suite, SuiteConfig, Tolerances};
use tracecone::FunctionFamily;

#[derive(Debug, Parser)]
#[command(name = "tracecone", version, about = "Spectral cone barrier: evaluate, verify, solve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate ζ, Γ, ∇Γ and the Euler residuals at one point.
    Eval(EvalArgs),
    /// Run the randomized barrier checks and write a report.
    Verify(VerifyArgs),
    /// Solve `min ⟨c,x⟩ s.t. Ax = b, x ∈ K` from a problem file.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Indent the JSON output.
    #[arg(long)]
    pretty: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Point file: `{"family": ..., "u": .., "v": .., "W_packed": [..]}`.
    #[arg(long)]
    input: PathBuf,
    /// Family, overriding the one in the file (e.g. `neglog`, `power:1.5`).
    #[arg(long)]
    family: Option<FunctionFamily>,
    /// Interior tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Optional suite configuration file; flags override its fields.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Family to check; repeat for several.
    #[arg(long)]
    family: Vec<FunctionFamily>,
    /// Matrix side to check; repeat for several.
    #[arg(long)]
    dim: Vec<usize>,
    /// Trials per (family, side).
    #[arg(long)]
    trials: Option<usize>,
    /// Slack for the compatibility inequality.
    #[arg(long)]
    tol: Option<f64>,
    /// Also run the x³ kernel, which must be flagged as non-monotone.
    #[arg(long)]
    negative_control: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Problem file: `{"family", "d", "c", "A", "b", "x0"}`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Centering tolerance on the Newton decrement.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] tracecone::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Core(_) => "invalid_input",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.into(), source })
}

fn emit<T: Serialize>(value: &T, out: &OutputArgs) -> Result<(), CliError> {
    let mut text = if out.pretty { serde_json::to_string_pretty(value) } else { serde_json::to_string(value) }
        .expect("report types serialize");
    text.push('\n');
    match &out.output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write { path: path.clone(), source }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write { path: "<stdout>".into(), source }),
    }
}

#[derive(Deserialize)]
struct PointFile {
    family: Option<FunctionFamily>,
    #[serde(flatten)]
    point: ConePoint,
}

#[derive(Serialize)]
struct EvalReport {
    family: FunctionFamily,
    d: usize,
    interior: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    zeta: Option<f64>,
    gamma: Option<f64>,
    gradient: Option<Vec<f64>>,
    euler_residual: Option<f64>,
    hessian_euler_residual: Option<f64>,
    barrier_parameter: Option<f64>,
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode, CliError> {
    let file: PointFile = read_json(&args.input)?;
    let family = args
        .family
        .or(file.family)
        .ok_or_else(|| CliError::Usage("no family given in the point file or via --family".into()))?;
    let tol = args.tol.unwrap_or(Tolerances::default().interior);
    if !(tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be nonnegative, got {tol}")));
    }
    let x = file.point;
    let mut report = EvalReport {
        family,
        d: x.side(),
        interior: false,
        reason: None,
        zeta: zeta(&family, &x).ok(),
        gamma: None,
        gradient: None,
        euler_residual: None,
        hessian_euler_residual: None,
        barrier_parameter: None,
    };
    let status = interior_status(&family, &x, tol).and_then(|_| BarrierPoint::new(&family, &x));
    match status {
        Ok(bp) => {
            let (first, second) = euler_residuals(&bp);
            report.interior = true;
            report.gamma = Some(bp.value());
            report.gradient = Some(bp.gradient());
            report.euler_residual = Some(first);
            report.hessian_euler_residual = Some(second);
            report.barrier_parameter = check_barrier_parameter(&family, &x).ok();
        }
        Err(e) => report.reason = Some(e.to_string()),
    }
    emit(&report, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, CliError> {
    let mut cfg = match &args.input {
        Some(path) => read_json::<SuiteConfig>(path)?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if !args.family.is_empty() {
        cfg.families = args.family.clone();
    }
    if !args.dim.is_empty() {
        cfg.sides = args.dim.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(tol) = args.tol {
        cfg.tolerances.inequality = tol;
    }
    if args.negative_control {
        cfg = cfg.with_negative_control();
    }
    let report = run_suite(&cfg)?;
    emit(&report, &args.out)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, CliError> {
    let problem: ConicProblem = read_json(&args.input)?;
    let mut cfg = SolveConfig::default();
    if let Some(n) = args.max_iters {
        cfg.max_iters = n;
    }
    if let Some(g) = args.gap_tol {
        cfg.gap_tol = g;
    }
    if let Some(c) = args.tol {
        cfg.center_tol = c;
    }
    let result = solve(&problem, &cfg)?;
    emit(&result, &args.out)?;
    Ok(if result.status == SolveStatus::Optimal { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let outcome = match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Solve(a) => cmd_solve(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let (line, column) = match &e {
                CliError::Parse { source, .. } if source.line() > 0 => (Some(source.line()), Some(source.column())),
                _ => (None, None),
            };
            let report = ErrorReport { error: e.kind(), message: e.to_string(), line, column };
            eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
            ExitCode::from(2)
        }
    }
}
