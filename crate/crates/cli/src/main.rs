//! `modescent` command-line front end.
//!
//! Exit codes: 0 success (critical point reached, audit passed), 1 runtime
//! error or failed audit, 2 iteration cap reached, 64 usage error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modescent::globalize::GridCounts;
use modescent::solver::parse_eta;
use modescent::{RetractionKind, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_MAX_ITERS: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "modescent",
    version,
    about = "Constrained multiobjective steepest descent"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver from one start point and write its trace.
    Solve(SolveArgs),
    /// Run the solver from a grid of start points and filter the results.
    Front(FrontArgs),
    /// Check derivatives, retractions and the direction solver.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Registered problem name.
    #[arg(long, conflicts_with = "problem_file")]
    problem: Option<String>,
    /// Polynomial problem definition (JSON).
    #[arg(long)]
    problem_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Activation tolerance for inequalities.
    #[arg(long)]
    eps: Option<f64>,
    /// Strategy threshold; `inf` never follows boundaries.
    #[arg(long, value_parser = parse_eta)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, value_parser = parse_retraction)]
    retraction: Option<RetractionKind>,
}

impl ConfigArgs {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            beta: self.beta.unwrap_or(d.beta),
            beta0: self.beta0.unwrap_or(d.beta0),
            sigma: self.sigma.unwrap_or(d.sigma),
            epsilon: self.eps.unwrap_or(d.epsilon),
            eta: self.eta.unwrap_or(d.eta),
            gamma: self.gamma.unwrap_or(d.gamma),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            retraction: self.retraction.unwrap_or(d.retraction),
            ..d
        }
    }
}

fn parse_retraction(s: &str) -> Result<RetractionKind, String> {
    RetractionKind::from_name(s).ok_or_else(|| {
        format!(
            "unknown retraction `{s}` (expected one of: {})",
            RetractionKind::NAMES.join(", ")
        )
    })
}

/// Comma-separated coordinates.
#[derive(Clone, Debug, PartialEq)]
struct Point(Vec<f64>);

impl std::str::FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("invalid coordinate `{p}`: {e}"))
            })
            .collect::<Result<_, _>>()
            .map(Point)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: Point,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FrontArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Points per axis, e.g. `20x20`; spans the problem's sampling box.
    #[arg(long, required = true)]
    grid: GridCounts,
    /// Single start point; requires a grid of all ones.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<Point>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Audits every registered problem when no problem is given.
    #[command(flatten)]
    problem: ProblemArgs,
    /// Also write `audit.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let code = match cli.command {
        Command::Solve(a) => commands::solve(&args, &a),
        Command::Front(a) => commands::front(&args, &a),
        Command::Audit(a) => commands::audit(&args, &a),
    };
    ExitCode::from(code)
}
