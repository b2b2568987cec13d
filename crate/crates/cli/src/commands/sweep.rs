use clap::Args;
use frmpc_core::closed_loop::{self, fixed_band_config, summarize_sweep, RunSummary};
use frmpc_core::sim::DaeSimulator;
use rayon::prelude::*;

use super::num;
use crate::config::AppConfig;
use crate::error::CliError;
use crate::output::OutDir;
use crate::DataArgs;

/// Worker threads for the sweep; unset or 0 means one per core.
pub const THREADS_ENV: &str = "FRMPC_THREADS";
pub const TABLE_FILE: &str = "sweep.csv";

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated bands in MW [default: 0, 0.5, ..., 10].
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Hours per run (stops earlier at end of life).
    #[arg(long)]
    hours: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
}

pub fn summary_file(band: f64) -> String {
    format!("summary_band_{band}.json")
}

fn default_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.5).collect()
}

fn threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        _ => Ok(0),
    }
}

pub fn run(a: &SweepArgs, mut cfg: AppConfig, out: &OutDir) -> Result<(), CliError> {
    a.data.apply(&mut cfg);
    cfg.check_files()?;
    if let Some(h) = a.hours {
        cfg.run.max_hours = h;
    }
    let mut grid = a.grid.clone().unwrap_or_else(default_grid);
    if grid.is_empty() {
        return Err(CliError::Config("--grid is empty".into()));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let params = cfg.params()?;
    let base = cfg.run_config(&params)?;
    for &f in &grid {
        fixed_band_config(&base, f).validate()?;
    }
    let data = cfg.market()?;
    let plant = DaeSimulator::new(params, cfg.sim_config()?);

    let mut names: Vec<String> = grid.iter().map(|&f| summary_file(f)).collect();
    names.push(TABLE_FILE.to_string());
    out.claim(&names)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads()?)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let results: Vec<Result<(f64, RunSummary), CliError>> = pool.install(|| {
        grid.par_iter()
            .map(|&f| {
                log::info!("sweep: band {f} MW");
                let ledger = closed_loop::run(&fixed_band_config(&base, f), &data, &plant)?;
                Ok((f, ledger.summary))
            })
            .collect()
    });
    let table = summarize_sweep(results.into_iter().collect::<Result<_, _>>()?);

    for (f, s) in &table.rows {
        let mut w = out.create(&summary_file(*f))?;
        serde_json::to_writer_pretty(&mut w, s)?;
        std::io::Write::flush(&mut w).map_err(|e| CliError::io("writing summary", e))?;
    }
    let mut w = csv::Writer::from_writer(out.create(TABLE_FILE)?);
    w.write_record([
        "band",
        "hours",
        "eol_reached",
        "lifetime_days",
        "revenue",
        "cost",
        "profit",
        "final_fade",
        "revenue_per_fade",
        "flagged_hours",
    ])?;
    for (f, s) in &table.rows {
        w.write_record([
            num(*f),
            s.hours.to_string(),
            s.eol_reached.to_string(),
            s.lifetime_days.to_string(),
            num(s.revenue),
            num(s.cost),
            num(s.profit),
            num(s.final_fade),
            num(s.revenue_per_fade()),
            s.flagged_hours.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("writing sweep table", e))?;
    println!(
        "best_profit_band={} best_revenue_per_fade_band={} points={}",
        num(table.best_profit),
        num(table.best_revenue_per_fade),
        table.rows.len()
    );
    Ok(())
}
