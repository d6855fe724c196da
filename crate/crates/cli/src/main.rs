//! `otomo`: batch front end for measurement design, analysis, simulation and
//! reconstruction.
//!
//! Exit codes: 0 success, 2 input error, 3 budget exhausted or incomplete
//! settings, 4 numerical failure.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "otomo", version, about = "Overlapping tomography design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal Pauli settings covering every requested marginal.
    DesignPauli(DesignPauliArgs),
    /// General Bloch-direction settings, random or optimized.
    DesignDirections(DesignDirectionsArgs),
    /// Sigma values, sample counts and objective sweeps.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Sample measurement counts from a state.
    Simulate(SimulateArgs),
    /// Reconstruct marginals from a counts record.
    Reconstruct(ReconstructArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PauliMethod {
    Exact,
    Greedy,
    Colouring,
    Recursive,
}

#[derive(Args)]
pub struct DesignPauliArgs {
    /// Hypergraph JSON file `{"n": .., "edges": [[..], ..]}`.
    #[arg(long, conflicts_with = "preset")]
    pub connectivity: Option<PathBuf>,
    /// `complete:n:k`, `ring:n:k`, `line:n:k`, `grid16` or `g7`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: PauliMethod,
    /// Exact-search time limit in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Base Pauli preset for `colouring` and `recursive`.
    #[arg(long)]
    pub base: Option<String>,
    /// Pauli text output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solve report JSON; defaults to `<out>.report.json`, or stderr.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also export the cover program in CPLEX LP format.
    #[arg(long)]
    pub lp: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DirectionMethod {
    Random,
    Optimize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConstraintKind {
    Free,
    Orthonormal,
}

#[derive(Args)]
pub struct DesignDirectionsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub method: DirectionMethod,
    /// Variance weight; the mean weight is `sqrt(1 - w2^2)`.
    #[arg(long, default_value_t = 0.8090169943749475)]
    pub w2: f64,
    #[arg(long, value_enum, default_value = "free")]
    pub constraint: ConstraintKind,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Largest pseudoinverse column norm per k-subset.
    Sigma(SigmaArgs),
    /// Samples needed for a confidence radius, and the ratio to a reference sigma.
    Samples(SamplesArgs),
    /// CSV of mean and spread of |det Z_S| for random and optimized sets.
    PortfolioSweep(SweepArgs),
}

#[derive(Args)]
pub struct SigmaArgs {
    /// Settings preset or file.
    #[arg(long)]
    pub settings: String,
    /// Marginal size; defaults to 2.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SamplesArgs {
    #[arg(long, required_unless_present = "settings")]
    pub sigma: Option<f64>,
    /// Take sigma as the sigma_max of these settings.
    #[arg(long, conflicts_with = "sigma")]
    pub settings: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 5.0)]
    pub reference: f64,
    #[arg(long, default_value_t = 0.1)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Number of random sets (seeds 0..S).
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// Comma-separated w2 values for the optimized rows.
    #[arg(long, default_value = "0,0.5,0.8090169943749475")]
    pub sweep_grid: String,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelKind {
    Multinomial,
    Poisson,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// `dicke:N:M` or `noise:P`.
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub settings: String,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, value_enum, default_value = "multinomial")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReconstructMethod {
    Mle,
    Linear,
}

#[derive(Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub settings: String,
    /// `all-pairs`, `all-triples` or a list such as `0-1,2-5`.
    #[arg(long, default_value = "all-pairs")]
    pub subsets: String,
    #[arg(long, value_enum, default_value = "mle")]
    pub method: ReconstructMethod,
    /// State to score fidelities against, `dicke:N:M` or `noise:P`.
    #[arg(long)]
    pub reference: Option<String>,
    /// Poisson resamples for fidelity error bars (needs --reference).
    #[arg(long, default_value_t = 0)]
    pub mc_repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DesignPauli(a) => commands::design_pauli(&a),
        Command::DesignDirections(a) => commands::design_directions(&a),
        Command::Analyze(AnalyzeCommand::Sigma(a)) => commands::analyze_sigma(&a),
        Command::Analyze(AnalyzeCommand::Samples(a)) => commands::analyze_samples(&a),
        Command::Analyze(AnalyzeCommand::PortfolioSweep(a)) => commands::portfolio_sweep(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otomo: {e}");
            ExitCode::from(e.code)
        }
    }
}
