use std::sync::Mutex;

use frmpc_core::closed_loop::{band_sweep, eol_check, run_with, summarize_sweep, InitialState};
use frmpc_core::sim::{ConstantFadePlant, DaeSimulator, HourTrace, SimConfig};
use frmpc_core::strategy::decide;
use frmpc_core::{
    run, CellParameters, CellState, HourlyCommitment, MarketData, Plant, PlantState, RunConfig, StrategyKind,
};

fn stub(steps: usize, fade: f64) -> ConstantFadePlant {
    ConstantFadePlant {
        params: CellParameters::default_lfp(),
        config: SimConfig {
            steps_per_hour: steps,
            ..SimConfig::default()
        },
        fade_per_hour: fade,
    }
}

fn config(kind: StrategyKind, hours: usize, horizon: usize, steps: usize) -> RunConfig {
    let mut c = RunConfig {
        max_hours: hours,
        ..RunConfig::default()
    };
    c.strategy.kind = kind;
    c.strategy.ocp.horizon = horizon;
    c.strategy.ocp.steps_per_hour = steps;
    c
}

#[test]
fn eol_boundary() {
    assert!(eol_check(0.2, 0.2));
    assert!(!eol_check(0.19999, 0.2));
    assert!(eol_check(0.15, 0.1));
}

#[test]
fn constant_fade_reaches_eol_on_schedule() {
    let m = MarketData::synthetic(1, 48, 60);
    for k in [5, 6, 7, 9] {
        // dyadic so the accumulated fade is exact
        let delta = 2f64.powi(-k);
        let ledger = run(&config(StrategyKind::FixedBand, 10_000, 1, 60), &m, &stub(60, delta)).unwrap();
        let expect = (0.2 / delta).ceil() as usize;
        assert_eq!(ledger.eol_hour, Some(expect), "delta = {delta}");
        assert_eq!(ledger.rows.len(), expect);
        assert!(ledger.summary.eol_reached);
        assert_eq!(ledger.summary.lifetime_days, expect / 24);
    }
}

#[test]
fn summary_equals_row_sums() {
    let m = MarketData::synthetic(2, 24, 60);
    let ledger = run(&config(StrategyKind::LfMpc, 30, 3, 60), &m, &stub(60, 1e-4)).unwrap();
    let s = &ledger.summary;
    let sum = |f: &dyn Fn(&frmpc_core::closed_loop::LedgerRow) -> f64| ledger.rows.iter().map(f).sum::<f64>();
    assert_eq!(s.hours, 30);
    assert!((s.revenue - sum(&|r| r.revenue)).abs() <= 1e-9);
    assert!((s.cost - sum(&|r| r.cost)).abs() <= 1e-9);
    assert!((s.profit - (sum(&|r| r.revenue) - sum(&|r| r.cost))).abs() <= 1e-9);
    assert!((s.cumulative_fr_band_mw - sum(&|r| r.fr_band)).abs() <= 1e-9);
    assert!((s.purchased_mwh - sum(&|r| r.purchase)).abs() <= 1e-9);
    for r in &ledger.rows {
        assert!((r.revenue - r.fr_price * r.fr_band).abs() <= 1e-12);
        assert!((r.cost - r.energy_price * r.purchase).abs() <= 1e-12);
    }
    // the market data wraps around after 24 hours
    assert_eq!(ledger.rows[25].fr_price, m.fr_price_at(1));
}

/// Wraps a plant and records every simulation request.
struct Recorder<'a> {
    inner: &'a dyn Plant,
    calls: Mutex<Vec<(PlantState, HourlyCommitment)>>,
}

impl Plant for Recorder<'_> {
    fn params(&self) -> &CellParameters {
        self.inner.params()
    }
    fn config(&self) -> &SimConfig {
        self.inner.config()
    }
    fn simulate(&self, start: &PlantState, c: &HourlyCommitment, alpha: &[f64], stop: bool) -> HourTrace {
        self.calls.lock().unwrap().push((*start, c.clone()));
        self.inner.simulate(start, c, alpha, stop)
    }
}

#[test]
fn only_first_hour_commitments_are_injected() {
    let m = MarketData::synthetic(3, 24, 60);
    let inner = stub(60, 1e-5);
    let plant = Recorder {
        inner: &inner,
        calls: Mutex::new(Vec::new()),
    };
    let cfg = config(StrategyKind::LfFadeMpc, 8, 4, 60);
    let mut starts = Vec::new();
    let ledger = run_with(&cfg, &m, &plant, |t, tr| starts.push((t, tr.start))).unwrap();
    let calls = plant.calls.lock().unwrap();
    let p = inner.params();
    for (t, start) in &starts {
        let expected = decide(start, *t, &m, p, &cfg.strategy).unwrap();
        assert_eq!(expected.plan.len(), 4);
        let hour: Vec<_> = calls.iter().filter(|(s, _)| s == start).collect();
        // the first simulation of the hour is the plan's first hour; later
        // ones are band reductions of it
        assert_eq!(&hour[0].1, expected.next());
        assert!(hour.iter().all(|(_, c)| c.fr_band <= expected.next().fr_band));
        assert_eq!(ledger.rows[*t].planned_fr_band, expected.next().fr_band);
    }
    assert_eq!(calls.len(), ledger.rows.iter().map(|r| r.simulations).sum::<usize>());
}

#[test]
fn zero_band_without_side_reaction_is_inert() {
    let p = CellParameters::default_lfp().without_side_reaction();
    let plant = DaeSimulator::new(
        p.clone(),
        SimConfig {
            steps_per_hour: 60,
            ..SimConfig::default()
        },
    );
    let m = MarketData::synthetic(4, 24, 60);
    let mut cfg = config(StrategyKind::FixedBand, 36, 1, 60);
    cfg.strategy.fixed_band = 0.0;
    let ledger = run(&cfg, &m, &plant).unwrap();
    assert_eq!(ledger.rows.len(), 36);
    assert_eq!(ledger.eol_hour, None);
    assert_eq!(ledger.summary.profit, 0.0);
    assert_eq!(ledger.summary.final_fade, 0.0);
    assert!(ledger.rows.iter().all(|r| r.revenue == 0.0 && r.feasible()));
}

#[test]
fn dae_run_keeps_fade_monotone_and_energy_in_window() {
    let p = CellParameters::default_lfp();
    let plant = DaeSimulator::new(
        p.clone(),
        SimConfig {
            steps_per_hour: 360,
            ..SimConfig::default()
        },
    );
    let m = MarketData::synthetic(5, 12, 1800);
    let mut cfg = config(StrategyKind::FixedBand, 12, 1, 360);
    cfg.strategy.fixed_band = 6.0;
    let ledger = run(&cfg, &m, &plant).unwrap();
    let mut last = 0.0;
    for r in &ledger.rows {
        assert!(r.fade >= last);
        last = r.fade;
        if r.feasible() {
            let cap = (1.0 - r.fade) * p.pack.e_max;
            assert!(r.energy >= 0.1 * cap - 1e-6 && r.energy <= 0.9 * cap + 1e-6);
        }
        assert!(r.fr_band >= 0.0 && r.fr_band <= 10.0 && r.purchase >= 0.0 && r.load >= 0.0);
    }
}

#[test]
fn exports_are_reproducible() {
    let m = MarketData::synthetic(6, 24, 60);
    let cfg = config(StrategyKind::LfMpc, 10, 2, 60);
    let export = || {
        let l = run(&cfg, &m, &stub(60, 2e-4)).unwrap();
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        l.write_csv(&mut csv).unwrap();
        l.write_summary_json(&mut json).unwrap();
        (csv, json)
    };
    let a = export();
    assert_eq!(a, export());
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("hour,planned_fr_band,fr_band"));
}

#[test]
fn custom_initial_state_and_bad_configs() {
    let p = CellParameters::default_lfp();
    let m = MarketData::synthetic(7, 24, 60);
    let mut cfg = config(StrategyKind::FixedBand, 5, 1, 60);
    let mut cell = CellState::fresh(&p, 0.4);
    cell.c_f = 0.19;
    cfg.initial = InitialState::Cell(cell);
    let ledger = run(&cfg, &m, &stub(60, 0.004)).unwrap();
    assert_eq!(ledger.summary.initial_fade, 0.19);
    // 0.194, 0.198, 0.202
    assert_eq!(ledger.eol_hour, Some(3));
    assert_eq!(ledger.rows.len(), 3);

    let mut bad = config(StrategyKind::FixedBand, 2, 1, 60);
    bad.eol_threshold = 0.0;
    assert!(run(&bad, &m, &stub(60, 0.0)).is_err());
    bad = config(StrategyKind::FixedBand, 0, 1, 60);
    assert!(run(&bad, &m, &stub(60, 0.0)).is_err());
    bad = config(StrategyKind::FixedBand, 2, 1, 60);
    bad.strategy.fixed_band = 11.0;
    assert!(run(&bad, &m, &stub(60, 0.0)).is_err());
}

#[test]
fn zero_band_sweep_still_fades() {
    let p = CellParameters::default_lfp();
    let plant = DaeSimulator::new(
        p,
        SimConfig {
            steps_per_hour: 360,
            ..SimConfig::default()
        },
    );
    let m = MarketData::synthetic(8, 1, 1800);
    let table = band_sweep(&[0.0], &config(StrategyKind::FixedBand, 1, 1, 360), &m, &plant).unwrap();
    let (f, s) = &table.rows[0];
    assert_eq!(*f, 0.0);
    assert_eq!(s.revenue, 0.0);
    assert!(s.final_fade > s.initial_fade);
}

#[test]
fn sweep_ties_go_to_the_smaller_band() {
    let m = MarketData::synthetic(9, 24, 60);
    let base = run(&config(StrategyKind::FixedBand, 3, 1, 60), &m, &stub(60, 1e-4)).unwrap().summary;
    let table = summarize_sweep(vec![(2.0, base.clone()), (1.0, base.clone()), (3.0, base)]);
    assert_eq!(table.rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
    assert_eq!(table.best_profit, 1.0);
    assert_eq!(table.best_revenue_per_fade, 1.0);
}
