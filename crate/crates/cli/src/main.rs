//! `frmpc`: single-hour plant simulation, fixed-band sweeps, closed-loop
//! strategy runs and comparison reports.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::AppConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "frmpc", version, about = "Battery dispatch for frequency regulation: plant simulation and MPC closed loops")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides FRMPC_OUT_DIR and the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Seed of the synthetic market.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate fixed commitments hour by hour and export the plant trace.
    Simulate(commands::simulate::SimulateArgs),
    /// Fixed-band closed loops over a grid of bands.
    Sweep(commands::sweep::SweepArgs),
    /// Closed-loop run of one strategy.
    Run(commands::run::RunArgs),
    /// Comparison table from summary JSON files.
    Report(commands::report::ReportArgs),
}

/// Inputs shared by the simulating subcommands.
#[derive(Debug, Args, Clone, Default)]
pub struct DataArgs {
    /// Cell parameter TOML.
    #[arg(long)]
    params: Option<PathBuf>,
    /// FR signal CSV (`hour,step,alpha`).
    #[arg(long)]
    fr: Option<PathBuf>,
    /// Price CSV (`hour,fr_price,energy_price`).
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Plant steps per hour.
    #[arg(long)]
    steps: Option<usize>,
}

impl DataArgs {
    fn apply(&self, cfg: &mut AppConfig) {
        if let Some(p) = &self.params {
            cfg.paths.params = Some(p.clone());
        }
        if let Some(p) = &self.fr {
            cfg.paths.fr_signal = Some(p.clone());
        }
        if let Some(p) = &self.prices {
            cfg.paths.prices = Some(p.clone());
        }
        if let Some(s) = self.steps {
            cfg.plant.steps_per_hour = s;
        }
    }
}

fn init_logging(level: &str) -> Result<(), CliError> {
    let filter: log::LevelFilter = level
        .parse()
        .map_err(|_| CliError::Config(format!("unknown log level '{level}'")))?;
    env_logger::Builder::new()
        .filter_level(filter)
        .parse_env("RUST_LOG")
        .format_timestamp(None)
        .try_init()
        .ok();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = AppConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(l) = &cli.log_level {
        cfg.log_level = l.clone();
    }
    init_logging(&cfg.log_level)?;
    let out = output::OutDir::resolve(cli.out.as_deref(), cfg.paths.out_dir.as_deref(), cli.force);
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a, cfg, &out),
        Command::Sweep(a) => commands::sweep::run(a, cfg, &out),
        Command::Run(a) => commands::run::run(a, cfg, &out),
        Command::Report(a) => commands::report::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
