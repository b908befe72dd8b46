use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robmv_cli::{exit_status, Command, MethodArg, RunConfig};

/// Robust multivariate estimators on CSV data.
#[derive(Parser, Debug)]
#[command(name = "robmv", version)]
struct Cli {
    /// Estimator to run.
    #[arg(value_enum)]
    command: Command,
    /// CSV file with a header row.
    input: PathBuf,
    /// Response columns (comma-separated); the class label for qda/lda.
    #[arg(long, value_delimiter = ',')]
    response: Vec<String>,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Subset size; overrides --alpha.
    #[arg(long)]
    h: Option<usize>,
    /// Number of components.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 500)]
    nstarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.975)]
    cutoff_prob: f64,
    /// Calibration method for rmsecv.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Largest number of components for rmsecv.
    #[arg(long)]
    kmax: Option<usize>,
    /// Restrict rmsecv to rows the model deems regular.
    #[arg(long)]
    robust: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig {
        command: cli.command,
        input: cli.input,
        response: cli.response,
        alpha: cli.alpha,
        h: cli.h,
        k: cli.k,
        nstarts: cli.nstarts,
        seed: cli.seed,
        cutoff_prob: cli.cutoff_prob,
        method: cli.method,
        kmax: cli.kmax,
        robust: cli.robust,
        out: cli.out,
    };
    ExitCode::from(exit_status(&cfg) as u8)
}
