//! `minwidth`: build and verify substitution networks, certify
//! self-intersections, and run the DISK training experiments.
//!
//! Exit codes: 0 success or certificate issued, 1 verified failure (gap above
//! epsilon, refusal, unsuccessful training), 2 usage or I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable overriding the output directory from the config file.
pub const OUT_ENV: &str = "MINWIDTH_OUT";

#[derive(Debug, Parser)]
#[command(name = "minwidth", version, about = "Minimum-width approximation laboratory")]
pub struct Cli {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides MINWIDTH_OUT and the config file).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed for training and random repairs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid resolution for sup-norm checks.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a scalar network in one activation family approximating another.
    Construct(ConstructArgs),
    /// Measure the grid sup gap of a network against an activation or another network.
    Verify(VerifyArgs),
    /// Certify that maps near g on [0,1]^m self-intersect.
    Certify(CertifyArgs),
    /// Write the DISK training and validation sets.
    Gendata(GendataArgs),
    /// Train one width-uniform network on DISK.
    Train(TrainArgs),
    /// Report the DISK losses of a network file.
    Eval(EvalArgs),
    /// Train increasing depths until the dual criterion is met.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Activation family of the produced network.
    #[arg(long)]
    pub from: String,
    /// Activation to approximate.
    #[arg(long)]
    pub to: String,
    /// Slope of the target LeakyReLU.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Parameter of the source family (LeakyReLU slope, Softplus or CELU beta).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sup-norm tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Verification interval (default -10 10).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,
    /// File stem for the outputs (defaults to the construction name).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Network file.
    #[arg(long)]
    pub net: PathBuf,
    /// Scalar target activation.
    #[arg(long, conflicts_with = "reference")]
    pub to: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reference network with the same shape; compared on [LO, HI]^d.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Sup-norm tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Verification interval (default -10 10).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Input dimension of g.
    #[arg(long)]
    pub m: usize,
    /// Output dimension of the candidate (m < n <= 2m); defaults to 2m.
    #[arg(long)]
    pub n: Option<usize>,
    /// Network file R^m -> R^n; g itself when absent.
    #[arg(long)]
    pub candidate: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GendataArgs {
    /// Rotation exponent of the DISK target (default 2).
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Debug, Args, Default)]
pub struct TrainFlags {
    /// Rotation exponent of the DISK target (default 2).
    #[arg(long)]
    pub k: Option<u32>,
    /// Activation family (default ELU).
    #[arg(long)]
    pub act: Option<String>,
    /// Parameter of the activation family.
    #[arg(long)]
    pub act_beta: Option<f64>,
    /// Initial Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Full-batch step budget.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Success threshold for both losses.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Steps between loss evaluations.
    #[arg(long)]
    pub eval_interval: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Hidden width.
    #[arg(long)]
    pub width: usize,
    /// Number of hidden layers.
    #[arg(long)]
    pub depth: usize,
    #[command(flatten)]
    pub flags: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Network file.
    #[arg(long)]
    pub net: PathBuf,
    /// Rotation exponent of the DISK target (default 2).
    #[arg(long)]
    pub k: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Hidden width.
    #[arg(long)]
    pub width: usize,
    /// Comma-separated depths or an inclusive range such as `1..6`.
    #[arg(long)]
    pub depths: String,
    #[command(flatten)]
    pub flags: TrainFlags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::error_code(&err))
        }
    }
}
