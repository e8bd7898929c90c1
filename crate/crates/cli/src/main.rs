//! `nbeats` — train, evaluate, decompose and ablate N-BEATS forecasters.

mod commands;
mod config;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nbeats", version, about = "Neural basis-expansion time-series forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single model or an ensemble and write forecasts.
    Train {
        /// Flat key=value run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for ensemble training.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Override the configured base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score forecast sources against the test set.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Forecast sources: .nbts model files, forecast CSVs, or the
        /// literals "naive2" / "snaive". Several sources are combined by a
        /// pointwise median.
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Print only this metric (smape, smape_m3, mape, mase, owa, nd).
        #[arg(long)]
        metric: Option<String>,
        /// OWA baseline: "internal" recomputes Naive2, otherwise a CSV of
        /// per-frequency baseline means (frequency,smape,mase).
        #[arg(long, default_value = "internal")]
        naive2: String,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-stack forecast components for selected series.
    Decompose {
        #[arg(long)]
        config: PathBuf,
        /// Trained model file (.nbts).
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated series ids.
        #[arg(long, value_delimiter = ',', required = true)]
        series: Vec<String>,
        /// Output directory for decompose-<id>.csv files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one design axis on a held-out validation split.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Axis to sweep: stacks, basis, topology or ensemble_size.
        #[arg(long)]
        axis: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write the sweep CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            workers,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            commands::cmd_train(&cfg, workers)
        }
        Command::Evaluate {
            config,
            inputs,
            metric,
            naive2,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_evaluate(&cfg, &inputs, metric.as_deref(), &naive2, out.as_deref())
        }
        Command::Decompose {
            config,
            model,
            series,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.out.clone());
            commands::cmd_decompose(&cfg, &model, &series, &out)
        }
        Command::Ablate {
            config,
            axis,
            workers,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_ablate(&cfg, &axis, workers, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
