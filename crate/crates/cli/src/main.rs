//! `odtalloc`: generate instances, solve them, and check the results.
//!
//! Exit codes: 0 success or passed check, 1 solver error or failed check,
//! 2 bad flags or unreadable input.

mod gen;
mod output;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "odtalloc", version, about = "Optimal allocation of origin/destination tasks to agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance: tasks.csv, agents.csv and spec.json.
    Gen(GenArgs),
    /// Solve an instance: plan.json, plot.csv and manifest.json.
    Solve(SolveArgs),
    /// Run a structural or optimality check: report.json and manifest.json.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    #[value(name = "gaussian_mixture", alias = "gaussian-mixture")]
    GaussianMixture,
    #[value(name = "grid")]
    Grid,
    #[value(name = "city_box", alias = "city-box")]
    CityBox,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub tasks: usize,
    #[arg(long)]
    pub agents: usize,
    #[arg(long, env = "ODTALLOC_SEED")]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Mixture components per side (gaussian_mixture).
    #[arg(long, default_value_t = 3)]
    pub components: usize,
    /// Component standard deviation (gaussian_mixture).
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Component means are drawn in [-extent, extent]^dim (gaussian_mixture).
    #[arg(long, default_value_t = 5.0)]
    pub extent: f64,
    /// Lattice spacing (grid).
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
    /// Box corners `x0,y0,x1,y1` (city_box); defaults to a 10 km square in meters.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    pub bbox: Option<Vec<f64>>,
    /// Read the box as `lon0,lat0,lon1,lat1` in degrees and project to meters.
    #[arg(long)]
    pub degrees: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Entropic,
    Reduced,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Entropic => "entropic",
            Method::Reduced => "reduced",
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub agents: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Entropic regularization; defaults to 1e-3 times the cost spread.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Marginal tolerance of the entropic solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Seed of the uniqueness re-solve.
    #[arg(long, env = "ODTALLOC_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write the cost matrix to cost.json.
    #[arg(long)]
    pub emit_cost: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Check {
    Twist,
    Nondegeneracy,
    Monge,
    Nestedness,
    Stability,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Twist => "twist",
            Check::Nondegeneracy => "nondegeneracy",
            Check::Monge => "monge",
            Check::Nestedness => "nestedness",
            Check::Stability => "stability",
        }
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: Check,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, env = "ODTALLOC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of agent quantile levels (nestedness).
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub agents: Option<PathBuf>,
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Stability tolerance; defaults to 1e-8 * max(1, max|c|).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input. Exit 2.
    Usage(String),
    /// The solver rejected the instance. Exit 1.
    Solver(odtalloc_core::Error),
    /// A check ran and did not pass. Exit 1.
    Failed,
}

impl Failure {
    pub fn input(err: odtalloc_core::Error) -> Self {
        Failure::Usage(format!("{}: {err}", err.name()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen::run(&args),
        Command::Solve(args) => solve::run(&args),
        Command::Verify(args) => verify::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Solver(err)) => {
            eprintln!("error: {}: {err}", err.name());
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
