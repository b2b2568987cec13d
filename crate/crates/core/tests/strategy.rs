use frmpc_core::sim::{ConstantFadePlant, SimConfig};
use frmpc_core::strategy::{adjust_band, decide, heuristic_commit, mpc_commit};
use frmpc_core::{CellParameters, CellState, HourlyCommitment, MarketData, Plant, PlantState, StrategyConfig, StrategyKind};
use proptest::prelude::*;

/// Plant with linear energy bookkeeping and no fade.
fn linear_plant(steps: usize) -> ConstantFadePlant {
    ConstantFadePlant {
        params: CellParameters::default_lfp(),
        config: SimConfig {
            steps_per_hour: steps,
            ..SimConfig::default()
        },
        fade_per_hour: 0.0,
    }
}

fn strategy(kind: StrategyKind, horizon: usize, steps: usize) -> StrategyConfig {
    let mut c = StrategyConfig {
        kind,
        ..StrategyConfig::default()
    };
    c.ocp.horizon = horizon;
    c.ocp.steps_per_hour = steps;
    c
}

#[test]
fn heuristic_examples() {
    let zero = [0.0; 4];
    let c = heuristic_commit(0.4, 0.0, 3.0, &zero, 0.5, 1.0);
    assert_eq!((c.fr_band, c.load), (3.0, 0.0));
    assert!((c.purchase - 0.1).abs() <= 1e-15);
    let c = heuristic_commit(0.6, 0.0, 3.0, &zero, 0.5, 1.0);
    assert_eq!(c.purchase, 0.0);
    assert!((c.load - 0.1).abs() <= 1e-15);
    // the FR energy of the hour is netted out
    let c = heuristic_commit(0.5, 0.0, 2.0, &[0.5, 0.5, 0.0, 0.0], 0.5, 1.0);
    assert_eq!((c.purchase, c.load), (0.0, 0.5));
}

#[test]
fn heuristic_hits_target_under_linear_bookkeeping() {
    let plant = linear_plant(360);
    let p = plant.params();
    let m = MarketData::synthetic(12, 1, 360);
    for (theta, cf) in [(0.3, 0.0), (0.5, 0.05), (0.7, 0.1)] {
        let mut cell = CellState::fresh(p, theta);
        cell.c_f = cf;
        let start = PlantState::new(cell, p);
        let c = heuristic_commit(cell.energy(p), cf, 0.4, m.alpha_at(0), 0.5, p.pack.e_max);
        let tr = plant.simulate(&start, &c, m.alpha_at(0), false);
        let target = 0.5 * (1.0 - cf) * p.pack.e_max;
        assert!((tr.energy.last().unwrap() - target).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn heuristic_never_buys_and_serves_at_once(
        e in 0.0f64..1.0,
        cf in 0.0f64..0.2,
        band in 0.0f64..10.0,
        alpha in prop::collection::vec(-1.0f64..1.0, 1..20),
    ) {
        let c = heuristic_commit(e, cf, band, &alpha, 0.5, 1.0);
        prop_assert!(c.purchase >= 0.0 && c.load >= 0.0);
        prop_assert!(c.purchase == 0.0 || c.load == 0.0);
        prop_assert_eq!(c.fr_band, band);
    }
}

#[test]
fn feasible_proposal_is_kept() {
    let plant = linear_plant(60);
    let p = plant.params();
    let start = PlantState::new(CellState::half_charged(p), p);
    let cfg = strategy(StrategyKind::FixedBand, 1, 60);
    for band in [0.0, 2.0] {
        let alpha = vec![0.1; 60];
        let c = heuristic_commit(start.cell.energy(p), 0.0, band, &alpha, 0.5, p.pack.e_max);
        let adj = adjust_band(&c, &start, &alpha, &cfg, &plant);
        assert_eq!(adj.commitment, c);
        assert_eq!(adj.simulations, 1);
        assert!(!adj.adjusted && !adj.fallback && !adj.flagged());
    }
}

#[test]
fn one_decrement_reaches_the_feasible_band() {
    // up for half an hour, down for the other half: the energy peaks at
    // E_0 + F / 2, so only F <= 0.8 stays below 0.9 MWh
    let plant = linear_plant(60);
    let p = plant.params();
    let start = PlantState::new(CellState::half_charged(p), p);
    let alpha: Vec<f64> = (0..60).map(|s| if s < 30 { 1.0 } else { -1.0 }).collect();
    let cfg = strategy(StrategyKind::FixedBand, 1, 60);
    let c = heuristic_commit(start.cell.energy(p), 0.0, 1.0, &alpha, 0.5, p.pack.e_max);
    let adj = adjust_band(&c, &start, &alpha, &cfg, &plant);
    assert_eq!(adj.commitment.fr_band, 0.5);
    assert_eq!(adj.simulations, 2);
    assert!(adj.adjusted && !adj.flagged());
    let peak = adj.trace.energy.iter().cloned().fold(0.0, f64::max);
    assert!((peak - (start.cell.energy(p) + 0.25)).abs() <= 1e-12);
}

#[test]
fn hopeless_hour_falls_back_to_rest_within_budget() {
    let plant = linear_plant(60);
    let p = plant.params();
    // start above the window: nothing can be feasible in the first step
    let start = PlantState::new(CellState::fresh(p, 0.95), p);
    let alpha = vec![0.0; 60];
    let cfg = strategy(StrategyKind::FixedBand, 1, 60);
    let c = heuristic_commit(start.cell.energy(p), 0.0, 10.0, &alpha, 0.5, p.pack.e_max);
    let adj = adjust_band(&c, &start, &alpha, &cfg, &plant);
    assert_eq!(adj.commitment, HourlyCommitment::rest());
    assert!(adj.fallback && adj.flagged());
    assert_eq!(adj.simulations, cfg.max_band_candidates());
    assert_eq!(cfg.max_band_candidates(), 21);
    assert_eq!(adj.trace.energy.len(), 60, "the applied hour is simulated in full");
}

#[test]
fn lf_mpc_rests_without_fr_revenue() {
    let p = CellParameters::default_lfp();
    let m = MarketData::new(vec![MarketData::synthetic(3, 1, 60).alpha_at(0).to_vec(); 2], vec![0.0; 2], vec![40.0; 2]).unwrap();
    let state = PlantState::new(CellState::half_charged(&p), &p);
    let d = mpc_commit(&state, 0, &m, &p, &strategy(StrategyKind::LfMpc, 2, 60)).unwrap();
    let c = d.next();
    assert!(c.fr_band.abs() <= 1e-6 && c.purchase.abs() <= 1e-6 && c.load.abs() <= 1e-6, "{c:?}");
    assert_eq!(d.plan.len(), 2);
}

#[test]
fn lf_fade_mpc_declines_band_when_fade_is_dear() {
    let p = CellParameters::default_lfp();
    let m = MarketData::synthetic(5, 3, 60);
    let state = PlantState::new(CellState::half_charged(&p), &p);
    let mut cfg = strategy(StrategyKind::LfFadeMpc, 3, 60);
    cfg.ocp.fade_penalty = 1e12;
    let d = mpc_commit(&state, 0, &m, &p, &cfg).unwrap();
    assert!(d.plan.iter().all(|c| c.fr_band <= 1e-6));
    // the plain LP on the same window does sell band
    let d = mpc_commit(&state, 0, &m, &p, &strategy(StrategyKind::LfMpc, 3, 60)).unwrap();
    assert!(d.next().fr_band > 0.1);
}

#[test]
fn hf_mpc_decision_is_admissible() {
    let p = CellParameters::default_lfp();
    let m = MarketData::synthetic(5, 1, 1800);
    let state = PlantState::new(CellState::half_charged(&p), &p);
    let d = decide(&state, 0, &m, &p, &strategy(StrategyKind::HfMpc, 1, 4)).unwrap();
    assert!(d.note.is_none());
    let c = d.next();
    assert!((0.0..=10.0).contains(&c.fr_band) && c.purchase >= 0.0 && c.load >= 0.0);
}

#[test]
fn fixed_band_decision_uses_the_heuristic() {
    let p = CellParameters::default_lfp();
    let m = MarketData::synthetic(5, 2, 60);
    let state = PlantState::new(CellState::fresh(&p, 0.42), &p);
    let cfg = StrategyConfig {
        fixed_band: 4.5,
        ..strategy(StrategyKind::FixedBand, 1, 60)
    };
    let d = decide(&state, 1, &m, &p, &cfg).unwrap();
    assert_eq!(d.next(), &heuristic_commit(state.cell.energy(&p), 0.0, 4.5, m.alpha_at(1), 0.5, p.pack.e_max));
    assert!(d.status.is_none());
}
