use std::path::PathBuf;

use clap::Args;
use frmpc_core::RunSummary;

use super::num;
use crate::error::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Summary JSON files written by `run` or `sweep`.
    #[arg(required = true)]
    summaries: Vec<PathBuf>,
    /// CSV instead of an aligned table.
    #[arg(long)]
    csv: bool,
}

const HEADER: [&str; 8] = [
    "Strategy",
    "Horizon (h)",
    "Life Time (days)",
    "Revenue",
    "Cost",
    "Profit",
    "Cumulative FR band (MW)",
    "Purchased Power (MWh)",
];

fn label(s: &RunSummary) -> String {
    match s.fixed_band {
        Some(f) => format!("{} F={}", s.strategy, num(f)),
        None => s.strategy.clone(),
    }
}

/// Table cells of one summary; a run that stopped before end of life shows
/// its lifetime as a lower bound.
fn cells(s: &RunSummary) -> Vec<String> {
    let life = if s.eol_reached {
        s.lifetime_days.to_string()
    } else {
        format!("{}+", s.lifetime_days)
    };
    vec![
        label(s),
        s.horizon.to_string(),
        life,
        num(s.revenue),
        num(s.cost),
        num(s.profit),
        num(s.cumulative_fr_band_mw),
        num(s.purchased_mwh),
    ]
}

pub fn read_summary(path: &PathBuf) -> Result<RunSummary, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{} is not a run summary: {e}", path.display())))
}

pub fn run(a: &ReportArgs) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = a
        .summaries
        .iter()
        .map(|p| read_summary(p).map(|s| cells(&s)))
        .collect::<Result<_, _>>()?;
    if a.csv {
        let mut w = csv::Writer::from_writer(std::io::stdout().lock());
        w.write_record(HEADER)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::io("writing report", e))?;
        return Ok(());
    }
    let mut widths: Vec<usize> = HEADER.iter().map(|h| h.chars().count()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cols: Vec<&str>| {
        cols.iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(HEADER.to_vec()));
    println!("{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in &rows {
        println!("{}", line(r.iter().map(String::as_str).collect()));
    }
    Ok(())
}
