use frmpc_core::sim::{check_feasibility, ConstantFadePlant, DaeSimulator, Feasibility, SimConfig};
use frmpc_core::{CellParameters, CellState, HourlyCommitment, MarketData, Plant, PlantState};

fn dae(p: &CellParameters, s: usize) -> DaeSimulator {
    DaeSimulator::new(p.clone(), SimConfig { steps_per_hour: s, ..SimConfig::default() })
}

#[test]
fn rest_hour_without_side_reaction_is_inert() {
    let p = CellParameters::default_lfp().without_side_reaction();
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let tr = dae(&p, 1800).simulate(&start, &HourlyCommitment::rest(), &vec![0.3; 1800], false);
    assert!(tr.is_feasible());
    let e0 = start.cell.energy(&p);
    assert!(tr.energy.iter().all(|e| *e == e0));
    assert_eq!(tr.fade_increment(), 0.0);
}

#[test]
fn scheduled_energy_matches_commitments() {
    let m = MarketData::synthetic(9, 1, 1800);
    let p = CellParameters::default_lfp();
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let c = HourlyCommitment::new(4.0, 0.3, 0.1);
    let tr = dae(&p, 1800).simulate(&start, &c, m.alpha_at(0), false);
    let scheduled: f64 = tr.power.iter().sum::<f64>() / 1800.0;
    let mean_alpha = m.alpha_at(0).iter().sum::<f64>() / 1800.0;
    assert!((scheduled - (mean_alpha * 4.0 + 0.3 - 0.1)).abs() <= 1e-12);
    assert!((tr.fr_energy_mwh - mean_alpha * 4.0).abs() <= 1e-12);
}

#[test]
fn linear_ramp_flags_first_crossing() {
    let p = CellParameters::default_lfp();
    let s = 360;
    let plant = ConstantFadePlant {
        params: p.clone(),
        config: SimConfig { steps_per_hour: s, ..SimConfig::default() },
        fade_per_hour: 0.0,
    };
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let e0 = start.cell.energy(&p);
    let hi = 0.9 * p.pack.e_max;
    let o = 2.0;
    // E_s = E_0 + (s + 1) O / S crosses hi after this many steps
    let cross = ((hi - e0) * s as f64 / o).floor() as usize;
    let tr = plant.simulate(&start, &HourlyCommitment::new(0.0, o, 0.0), &vec![0.0; s], true);
    assert_eq!(tr.verdict, Feasibility::OverCharge { step: cross });
    assert_eq!(tr.energy.len(), cross + 1, "stops at the violation");
}

#[test]
fn dae_overcharge_is_reported_not_clamped() {
    let p = CellParameters::default_lfp();
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let tr = dae(&p, 360).simulate(&start, &HourlyCommitment::new(0.0, 2.0, 0.0), &vec![0.0; 360], false);
    let step = match tr.verdict {
        Feasibility::OverCharge { step } => step,
        ref v => panic!("{v:?}"),
    };
    assert_eq!(check_feasibility(&tr), tr.verdict);
    assert!(tr.energy[step] > tr.energy_upper[step]);
    assert!(tr.energy[..step].iter().zip(&tr.energy_upper).all(|(e, u)| e <= u));
    // the run continues past the violation and keeps charging
    let last = tr.energy.len() - 1;
    assert!(last > step && tr.energy[last] > tr.energy[step]);
}

#[test]
fn upper_bound_is_inclusive() {
    let p = CellParameters::default_lfp();
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let mut tr = dae(&p, 60).simulate(&start, &HourlyCommitment::rest(), &vec![0.0; 60], false);
    tr.energy[10] = tr.energy_upper[10];
    assert!(check_feasibility(&tr).is_feasible());
    tr.energy[20] = tr.energy_lower[20] - 1e-9;
    assert_eq!(check_feasibility(&tr), Feasibility::OverDischarge { step: 20 });
}

#[test]
fn simulation_is_deterministic_and_fade_grows() {
    let m = MarketData::synthetic(1, 1, 1800);
    let p = CellParameters::default_lfp();
    let start = PlantState::new(CellState::half_charged(&p), &p);
    let c = HourlyCommitment::new(6.0, 0.0, 0.0);
    let a = dae(&p, 1800).simulate(&start, &c, m.alpha_at(0), false);
    let b = dae(&p, 1800).simulate(&start, &c, m.alpha_at(0), false);
    assert_eq!(a, b);
    assert!(a.is_feasible());
    assert!(a.fade_increment() > 0.0);
}

#[test]
fn fade_is_the_integral_of_the_fade_rate() {
    let m = MarketData::synthetic(12, 1, 1800);
    let p = CellParameters::default_lfp();
    let start = PlantState::new(CellState::fresh(&p, 0.55), &p);
    let tr = dae(&p, 1800).simulate(&start, &HourlyCommitment::new(5.0, 0.0, 0.05), m.alpha_at(0), false);
    assert!(tr.is_feasible());
    // implicit Euler: each step adds the end-of-step rate times dt
    let integral: f64 = tr.fade_rate.iter().map(|r| r * 2.0).sum();
    assert!((tr.fade_increment() - integral).abs() <= 1e-12 * integral.max(1e-12) + 1e-18);
    assert!(integral > 0.0);
}
