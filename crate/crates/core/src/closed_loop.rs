//! Receding-horizon driver: each hour the policy commits, the band is
//! adjusted until the plant can honour it, the hour is applied and the
//! ledger updated, until the fade threshold or the run length is reached.

use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::cell::CellState;
use crate::error::StrategyError;
use crate::market::MarketData;
use crate::sim::{HourTrace, HourlyCommitment, Plant, PlantState};
use crate::strategy::{adjust_band, decide, heuristic_commit, StrategyConfig, StrategyKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// New cell with the negative electrode half lithiated.
    HalfCharged,
    Cell(CellState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Maximum number of hours `Y`.
    pub max_hours: usize,
    /// Fade fraction that ends the run.
    pub eol_threshold: f64,
    pub initial: InitialState,
    pub strategy: StrategyConfig,
    /// Optional solve-time budget; an MPC plan arriving later is replaced by
    /// the previous hour's band.
    pub deadline: Option<Duration>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_hours: 17_520,
            eol_threshold: 0.2,
            initial: InitialState::HalfCharged,
            strategy: StrategyConfig::default(),
            deadline: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        self.strategy.validate()?;
        if !(self.eol_threshold > 0.0 && self.eol_threshold <= 1.0) {
            return Err(StrategyError::Config(format!(
                "end-of-life threshold {} outside (0, 1]",
                self.eol_threshold
            )));
        }
        if self.max_hours == 0 {
            return Err(StrategyError::Config("run length must be at least one hour".into()));
        }
        Ok(())
    }
}

/// `true` once the fade reaches the threshold (inclusive).
pub fn eol_check(c_f: f64, threshold: f64) -> bool {
    c_f >= threshold
}

/// One applied hour.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    /// Zero-based hour index.
    pub hour: usize,
    /// Band proposed by the policy before adjustment.
    pub planned_fr_band: f64,
    pub fr_band: f64,
    pub purchase: f64,
    /// Mean load over the hour.
    pub load: f64,
    pub fr_price: f64,
    pub energy_price: f64,
    pub revenue: f64,
    pub cost: f64,
    /// Energy at the end of the hour, MWh.
    pub energy: f64,
    /// Fade at the end of the hour.
    pub fade: f64,
    /// SEI film thickness at the end of the hour, m.
    pub film: f64,
    pub feasibility: String,
    pub adjusted: bool,
    pub fallback: bool,
    pub simulations: usize,
    pub solver_status: String,
    pub solve_time: Duration,
    pub note: Option<String>,
}

impl LedgerRow {
    pub fn feasible(&self) -> bool {
        self.feasibility == "feasible"
    }
}

/// Run aggregates; also the summary JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    /// Band of the fixed-band policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_band: Option<f64>,
    pub horizon: usize,
    pub hours: usize,
    pub eol_reached: bool,
    pub lifetime_days: usize,
    pub revenue: f64,
    pub cost: f64,
    pub profit: f64,
    pub cumulative_fr_band_mw: f64,
    pub purchased_mwh: f64,
    pub initial_fade: f64,
    pub final_fade: f64,
    pub flagged_hours: usize,
    pub adjusted_hours: usize,
    pub solver_failures: usize,
}

impl RunSummary {
    /// Revenue per unit fade accumulated over the run.
    pub fn revenue_per_fade(&self) -> f64 {
        let d = self.final_fade - self.initial_fade;
        if d > 0.0 {
            self.revenue / d
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedLoopLedger {
    pub rows: Vec<LedgerRow>,
    /// Hours elapsed when the fade threshold was reached.
    pub eol_hour: Option<usize>,
    pub summary: RunSummary,
}

const CSV_COLUMNS: [&str; 18] = [
    "hour",
    "planned_fr_band",
    "fr_band",
    "purchase",
    "load",
    "fr_price",
    "energy_price",
    "revenue",
    "cost",
    "energy",
    "fade",
    "film",
    "feasibility",
    "adjusted",
    "fallback",
    "simulations",
    "solver_status",
    "note",
];

impl ClosedLoopLedger {
    fn new(rows: Vec<LedgerRow>, eol_hour: Option<usize>, initial_fade: f64, cfg: &RunConfig) -> Self {
        let hours = rows.len();
        let revenue = rows.iter().map(|r| r.revenue).sum();
        let cost = rows.iter().map(|r| r.cost).sum();
        let summary = RunSummary {
            strategy: cfg.strategy.kind.label().to_string(),
            fixed_band: (cfg.strategy.kind == StrategyKind::FixedBand).then_some(cfg.strategy.fixed_band),
            horizon: cfg.strategy.horizon(),
            hours,
            eol_reached: eol_hour.is_some(),
            lifetime_days: eol_hour.unwrap_or(hours) / 24,
            revenue,
            cost,
            profit: revenue - cost,
            cumulative_fr_band_mw: rows.iter().map(|r| r.fr_band).sum(),
            purchased_mwh: rows.iter().map(|r| r.purchase).sum(),
            initial_fade,
            final_fade: rows.last().map_or(initial_fade, |r| r.fade),
            flagged_hours: rows.iter().filter(|r| !r.feasible()).count(),
            adjusted_hours: rows.iter().filter(|r| r.adjusted).count(),
            solver_failures: rows.iter().filter(|r| r.note.is_some()).count(),
        };
        Self { rows, eol_hour, summary }
    }

    /// Hourly ledger as CSV. Solve times are left out so that repeated runs
    /// export identical bytes; see [`write_timing_csv`](Self::write_timing_csv).
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            out.write_record([
                r.hour.to_string(),
                r.planned_fr_band.to_string(),
                r.fr_band.to_string(),
                r.purchase.to_string(),
                r.load.to_string(),
                r.fr_price.to_string(),
                r.energy_price.to_string(),
                r.revenue.to_string(),
                r.cost.to_string(),
                r.energy.to_string(),
                r.fade.to_string(),
                r.film.to_string(),
                r.feasibility.clone(),
                r.adjusted.to_string(),
                r.fallback.to_string(),
                r.simulations.to_string(),
                r.solver_status.clone(),
                r.note.clone().unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Per-hour policy solve times in seconds.
    pub fn write_timing_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["hour", "solve_time_s"])?;
        for r in &self.rows {
            out.write_record([r.hour.to_string(), r.solve_time.as_secs_f64().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, &self.summary)
    }
}

/// Runs the closed loop. Hour-level problems (infeasible hours, solver
/// failures) are recorded in the ledger; only configuration errors abort.
pub fn run(cfg: &RunConfig, data: &MarketData, plant: &dyn Plant) -> Result<ClosedLoopLedger, StrategyError> {
    run_with(cfg, data, plant, |_, _| {})
}

/// As [`run`], calling `observe(hour, trace)` after every applied hour.
pub fn run_with(
    cfg: &RunConfig,
    data: &MarketData,
    plant: &dyn Plant,
    mut observe: impl FnMut(usize, &HourTrace),
) -> Result<ClosedLoopLedger, StrategyError> {
    cfg.validate()?;
    let p = plant.params();
    let steps = plant.steps_per_hour();
    let resampled;
    let data = if data.steps_per_hour() == steps {
        data
    } else {
        resampled = data
            .resampled(steps)
            .map_err(|e| StrategyError::Config(format!("market data does not fit the plant resolution: {e}")))?;
        &resampled
    };
    let cell = match cfg.initial {
        InitialState::HalfCharged => CellState::half_charged(p),
        InitialState::Cell(c) => c,
    };
    let mut state = PlantState::new(cell, p);
    let mut rows: Vec<LedgerRow> = Vec::new();
    let mut eol_hour = None;
    let mut previous: Option<HourlyCommitment> = None;
    for t in 0..cfg.max_hours {
        let alpha = data.alpha_at(t);
        let decision = decide(&state, t, data, p, &cfg.strategy)?;
        let mut note = decision.note.clone();
        let mut proposal = decision.next().clone();
        if let (Some(limit), Some(prev)) = (cfg.deadline, &previous) {
            if decision.solve_time > limit {
                proposal = heuristic_commit(
                    state.cell.energy(p),
                    state.cell.c_f,
                    prev.fr_band,
                    alpha,
                    cfg.strategy.ocp.eta_l,
                    p.pack.e_max,
                );
                note = Some(format!("solve took {:?}, reusing the previous band", decision.solve_time));
            }
        }
        let adj = adjust_band(&proposal, &state, alpha, &cfg.strategy, plant);
        observe(t, &adj.trace);
        state = adj.trace.end;
        let c = &adj.commitment;
        let fr_price = data.fr_price_at(t);
        let energy_price = data.energy_price_at(t);
        rows.push(LedgerRow {
            hour: t,
            planned_fr_band: proposal.fr_band,
            fr_band: c.fr_band,
            purchase: c.purchase,
            load: c.mean_load(),
            fr_price,
            energy_price,
            revenue: fr_price * c.fr_band,
            cost: energy_price * c.purchase,
            energy: state.cell.energy(p),
            fade: state.cell.c_f,
            film: state.cell.delta_f,
            feasibility: adj.trace.verdict.label().to_string(),
            adjusted: adj.adjusted,
            fallback: adj.fallback,
            simulations: adj.simulations,
            solver_status: decision.status.map(|s| s.to_string()).unwrap_or_default(),
            solve_time: decision.solve_time,
            note,
        });
        previous = Some(adj.commitment);
        if eol_check(state.cell.c_f, cfg.eol_threshold) {
            eol_hour = Some(t + 1);
            break;
        }
    }
    Ok(ClosedLoopLedger::new(rows, eol_hour, cell.c_f, cfg))
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    /// `(F, summary)` in ascending band order.
    pub rows: Vec<(f64, RunSummary)>,
    /// Band with the highest profit (smallest on ties).
    pub best_profit: f64,
    /// Band with the highest revenue per unit fade (smallest on ties).
    pub best_revenue_per_fade: f64,
}

/// Orders sweep results by band and picks the maximisers, breaking ties
/// toward the smaller band.
pub fn summarize_sweep(mut rows: Vec<(f64, RunSummary)>) -> SweepTable {
    assert!(!rows.is_empty(), "band sweep needs at least one grid point");
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let argmax = |key: &dyn Fn(&RunSummary) -> f64| {
        let mut best = 0;
        for i in 1..rows.len() {
            if key(&rows[i].1) > key(&rows[best].1) {
                best = i;
            }
        }
        rows[best].0
    };
    let best_profit = argmax(&|s| s.profit);
    let best_revenue_per_fade = argmax(&|s| s.revenue_per_fade());
    SweepTable {
        rows,
        best_profit,
        best_revenue_per_fade,
    }
}

/// Fixed-band closed loop at every band of `grid`.
pub fn band_sweep(grid: &[f64], cfg: &RunConfig, data: &MarketData, plant: &dyn Plant) -> Result<SweepTable, StrategyError> {
    if grid.is_empty() {
        return Err(StrategyError::Config("band grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &f in grid {
        let ledger = run(&fixed_band_config(cfg, f), data, plant)?;
        rows.push((f, ledger.summary));
    }
    Ok(summarize_sweep(rows))
}

/// `cfg` switched to the fixed-band policy at band `f`.
pub fn fixed_band_config(cfg: &RunConfig, f: f64) -> RunConfig {
    let mut c = cfg.clone();
    c.strategy.kind = StrategyKind::FixedBand;
    c.strategy.fixed_band = f;
    c
}
