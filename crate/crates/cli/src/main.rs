//! `vtergm` command-line interface.
//!
//! Exit codes: 0 success, 2 validation error, 3 non-convergence, 4 I/O error.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "vtergm", version, about = "Valued temporal ERGMs for directed flow networks")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every random stream in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (default `vtergm_out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub flows: Option<PathBuf>,
    #[arg(long)]
    pub lagged_flows: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long)]
    pub distances: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub n_networks: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive statistics of the current (and lagged) network.
    Summarize {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Pairwise political, rural and racial dissimilarities.
    Dissim {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fit the configured model by penalised pseudo-likelihood.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Dyads in the stratified sample (default: all).
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long)]
        ridge_lambda: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Volume adequacy check of a fitted model.
    Gof {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        fit: Option<PathBuf>,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Draw networks from a fitted model.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        fit: Option<PathBuf>,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Compare expected total flow with named coefficients set to zero.
    Knockout {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Term label to zero; repeatable. Replaces the configured list.
        #[arg(long = "zero")]
        zero: Vec<String>,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Generate a synthetic dataset from known coefficients.
    Synth {
        #[arg(long)]
        n_nodes: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<CliError>().is_some() {
            return EXIT_VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<vtergm::Error>() {
            return match e {
                vtergm::Error::Io { .. } => EXIT_IO,
                vtergm::Error::Csv { source, .. } if source.is_io_error() => EXIT_IO,
                vtergm::Error::Numerical(_) => EXIT_NOT_CONVERGED,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
