//! `cshock`: fit, forecast, simulate and inspect common-shock claim models.
//!
//! Exit codes: 0 success, 1 I/O, 2 configuration, 3 data, 4 numerical.

mod config;
mod data;
mod report;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<cshock_core::Error> for CliError {
    fn from(e: cshock_core::Error) -> Self {
        use cshock_core::Error as E;
        match e {
            E::UnknownName { .. } => Self::Config(e.to_string()),
            E::NonPositiveValue { .. } | E::Layout(_) => Self::Data(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "cshock", version, about = "Common-shock log-normal models for claim arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Write the JSON report (or simulated CSV) here; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate location and dispersion parameters.
    Fit(Common),
    /// Fit, then forecast the future region and its reserves.
    Forecast {
        #[command(flatten)]
        common: Common,
        /// Also report the total with cross-array covariances set to zero.
        #[arg(long)]
        independence_counterfactual: bool,
    },
    /// Generate a synthetic claim collection.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print layout, partition and design dimensions.
    Inspect(Common),
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(text: String, report: &T, out: Option<&Path>) -> Result<(), CliError> {
    print!("{text}");
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
        write_file(path, &json)?;
    }
    Ok(())
}

fn load(common: &Common) -> Result<(RunConfig, Option<PathBuf>), CliError> {
    let config = RunConfig::load(&common.config)?;
    let out = common.out.clone().or_else(|| config.out.clone());
    Ok((config, out))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(common) => {
            let (config, out) = load(&common)?;
            let r = run::fit_report(&config)?;
            emit(r.render(), &r, out.as_deref())
        }
        Command::Forecast {
            common,
            independence_counterfactual,
        } => {
            let (config, out) = load(&common)?;
            let r = run::forecast_report(&config, independence_counterfactual)?;
            emit(r.render(), &r, out.as_deref())
        }
        Command::Simulate { common, seed } => {
            let (config, out) = load(&common)?;
            let csv = run::simulate_csv(&config, seed.unwrap_or(config.seed))?;
            match out {
                Some(path) => write_file(&path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Inspect(common) => {
            let (config, out) = load(&common)?;
            let r = run::inspect_report(&config)?;
            emit(r.render(), &r, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cshock: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
