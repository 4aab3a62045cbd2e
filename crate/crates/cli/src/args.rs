//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trajopt::problems::BenchmarkName;
use trajopt::solvers::Method;

#[derive(Debug, Parser)]
#[command(name = "trajopt", version, about = "Trajectory optimization solvers and benchmark studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one benchmark and write the iteration trace.
    Solve(SolveArgs),
    /// Iteration counts over the standard starting points.
    Suite(SuiteArgs),
    /// Closed-loop noise study of the optimal feedback.
    Feedback(FeedbackArgs),
    /// Accuracy of local models for the deviations produced by one step.
    Perturbation(PerturbationArgs),
}

fn parse_problem(s: &str) -> Result<BenchmarkName, String> {
    s.parse().map_err(|e: trajopt::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: trajopt::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum RegScheme {
    None,
    LmShift,
    AdaptiveShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteName {
    Tp3Small,
    Tp3Large,
    Tp4,
    All,
}

/// Solver settings shared by all commands. Unset flags keep the value from
/// `--config` or the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    #[arg(long, value_enum)]
    pub reg_scheme: Option<RegScheme>,
    /// Invert indefinite Q_uu as is instead of failing.
    #[arg(long)]
    pub allow_indefinite: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Sets both the relative cost-change and the expected-reduction tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub backtrack_factor: Option<f64>,
    #[arg(long)]
    pub alpha_switch: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    /// Output directory (default: `$TRAJOPT_OUT_DIR/<run>` or `trajopt-out/<run>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with optional `[solver]` and `[problem]` tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of the random initial controls.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Half-width of the uniform random initial controls.
    #[arg(long)]
    pub u_scale: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, value_parser = parse_problem)]
    pub problem: Option<BenchmarkName>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Tabulated starting point 1–5 (tp3 and tp4 only) instead of random controls.
    #[arg(long)]
    pub start_point: Option<u8>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long, value_enum)]
    pub suite: SuiteName,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "ilqr", value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Clone, Args)]
pub struct FeedbackArgs {
    #[arg(long, value_parser = parse_problem, default_value = "pendulum")]
    pub problem: BenchmarkName,
    /// Method used to reach the optimum before polishing with DDP.
    #[arg(long, value_parser = parse_method, default_value = "ilqr")]
    pub method: Method,
    #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.02,0.05")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.02)]
    pub envelope_sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub envelope_trials: usize,
    /// Seed of the noise streams.
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub common: CommonFlags,
}

#[derive(Debug, Clone, Args)]
pub struct PerturbationArgs {
    #[arg(long, value_parser = parse_problem, default_value = "pendulum")]
    pub problem: BenchmarkName,
    /// Backward pass producing the step (indefinite Q_uu is inverted as is
    /// unless a regularization scheme is selected).
    #[arg(long, value_parser = parse_method, default_value = "sn")]
    pub method: Method,
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.05,0.01")]
    pub alphas: Vec<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub common: CommonFlags,
}
