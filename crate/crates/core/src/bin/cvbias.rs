use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvbias::cli::{self, CliOptions};

#[derive(Parser)]
#[command(
    name = "cvbias",
    version,
    about = "Finite-sample bias of cross-validation on time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one simulated path as CSV.
    Simulate(Common),
    /// Decompose CV MSE per path, model and scheme.
    Decompose(Common),
    /// Monte Carlo estimate of the bias term, pooled and per index.
    Bias(Common),
    /// Selection frequencies and agreement with the minimum-ASE model.
    Select(Common),
    /// Bias and MASE across a grid of sample sizes and AR coefficients.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file (simulate, decompose) or directory (bias, select, sweep).
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "CVBIAS_THREADS")]
    threads: Option<usize>,
    /// Check every rank-one downdate against a refit.
    #[arg(long)]
    crosscheck: bool,
}

impl From<Common> for CliOptions {
    fn from(c: Common) -> Self {
        CliOptions {
            config: c.config,
            out: c.out,
            seed: c.seed,
            reps: c.reps,
            threads: c.threads,
            crosscheck: c.crosscheck,
        }
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate(c) => cli::cmd_simulate(&c.into()).map(|_| ()),
        Command::Decompose(c) => cli::cmd_decompose(&c.into()).map(|_| ()),
        Command::Bias(c) => cli::cmd_bias(&c.into()).map(|_| ()),
        Command::Select(c) => cli::cmd_select(&c.into()).map(|_| ()),
        Command::Sweep(c) => cli::cmd_sweep(&c.into()).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
