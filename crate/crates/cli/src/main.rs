//! `gmmrf`: train, scale, simulate, reconstruct, denoise and evaluate.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
//! Set `GMMRF_THREADS` to bound the worker pool.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RegOverrides;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "gmmrf", version, about = "GM-MRF patch prior: training, MAP denoising and CT reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a grouped patch mixture from training images.
    Train {
        /// TOML job file.
        config: PathBuf,
    },
    /// Rewrite a model with new regularization parameters.
    ScaleModel {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Covariance compression rate in [0, 1] [default: keep]
        #[arg(long)]
        p: Option<f64>,
        /// Target average standard deviation, HU [default: keep]
        #[arg(long)]
        alpha: Option<f64>,
        /// Overall prior scale [default: keep]
        #[arg(long)]
        sigma_x: Option<f64>,
    },
    /// Render a phantom and optionally add image noise or scan it.
    Simulate { config: PathBuf },
    /// MAP (or FBP) reconstruction from a sinogram.
    Reconstruct { config: PathBuf },
    /// MAP denoising of an image with white Gaussian noise.
    Denoise { config: PathBuf },
    /// RMSE, ROI statistics and wire MTF report.
    Eval { config: PathBuf },
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GMMRF_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("GMMRF_THREADS must be a positive integer, got {v:?}"))?;
    anyhow::ensure!(n > 0, "GMMRF_THREADS must be a positive integer, got {v:?}");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Train { config } => commands::train::run(&config),
        Command::ScaleModel { input, output, p, alpha, sigma_x } => {
            commands::scale::run(&input, &output, RegOverrides { sigma_x, p, alpha })
        }
        Command::Simulate { config } => commands::simulate::run(&config),
        Command::Reconstruct { config } => commands::reconstruct::run(&config),
        Command::Denoise { config } => commands::denoise::run(&config),
        Command::Eval { config } => commands::eval::run(&config),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<gmmrf_core::Error>())
        .any(gmmrf_core::Error::is_numerical);
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
