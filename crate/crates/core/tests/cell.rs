use frmpc_core::cell::{self, AlgebraicState, CellState};
use frmpc_core::sim::{DaeSimulator, HourlyCommitment, Plant, PlantState, SimConfig};
use frmpc_core::market::synth_fr;
use frmpc_core::CellParameters;
use proptest::prelude::*;

/// Constant power that draws roughly 1C from `x` at open circuit, MW.
fn one_c_power(x: &CellState, p: &CellParameters) -> f64 {
    let v = p.p.ocv.eval(x.theta_p(p)) - p.n.ocv.eval(x.theta_n(p));
    p.one_c_current() * v * 1e-6
}

fn run(x0: CellState, power: f64, dt: f64, steps: usize, p: &CellParameters) -> CellState {
    let mut x = x0;
    let mut a = AlgebraicState::open_circuit(&x, p);
    for _ in 0..steps {
        let (x1, a1) = cell::step(&x, power, dt, p, &a).unwrap();
        x = x1;
        a = a1;
    }
    x
}

#[test]
fn lithium_is_conserved_without_side_reaction() {
    let p = CellParameters::default_lfp().without_side_reaction();
    let x0 = CellState::fresh(&p, 0.1);
    let li0 = x0.lithium(&p);
    let mut x = x0;
    let mut a = AlgebraicState::open_circuit(&x, &p);
    for s in 0..1800 {
        // charge, then discharge, then rest
        let power = match s {
            0..=599 => 0.8,
            600..=1199 => -0.8,
            _ => 0.0,
        };
        let (x1, a1) = cell::step(&x, power, 2.0, &p, &a).unwrap();
        x = x1;
        a = a1;
        assert!(((x.lithium(&p) - li0) / li0).abs() <= 1e-10, "step {s}");
    }
    assert_eq!(x.c_f, 0.0);
    assert_eq!(x.delta_f, 0.0);
}

#[test]
fn backward_euler_matches_fine_substepping() {
    let p = CellParameters::default_lfp();
    let x0 = CellState::fresh(&p, 0.05);
    let power = one_c_power(&x0, &p);
    let coarse = run(x0, power, 2.0, 1800, &p);
    let fine = run(x0, power, 0.02, 180_000, &p);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    assert!(rel(coarse.c_avg_n, fine.c_avg_n) <= 1e-3);
    assert!(rel(coarse.c_avg_p, fine.c_avg_p) <= 1e-3);
    assert!(coarse.theta_n(&p) > 0.5, "the hour should move a large part of the capacity");
}

#[test]
fn fade_rate_grows_with_charging_power() {
    let p = CellParameters::default_lfp();
    let x = CellState::half_charged(&p);
    let g = AlgebraicState::open_circuit(&x, &p);
    let mut last = 0.0;
    for i in -20..=20 {
        let power = 0.5 * i as f64;
        let (x1, a1) = cell::step(&x, power, 2.0, &p, &g).unwrap();
        let rate = cell::outputs(&x1, &a1, &p).fade_rate;
        assert!(rate >= last, "P = {power}: {rate} < {last}");
        last = rate;
    }
    // charging at full rate is much worse than resting
    let rest = cell::step(&x, 0.0, 2.0, &p, &g).unwrap();
    let full = cell::step(&x, 10.0, 2.0, &p, &g).unwrap();
    assert!(cell::outputs(&full.0, &full.1, &p).fade_rate > 2.0 * cell::outputs(&rest.0, &rest.1, &p).fade_rate);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fade_and_film_never_decrease(seed in 0u64..1_000_000, f in 0.0f64..10.0, o in 0.0f64..2.0, l in 0.0f64..2.0) {
        let p = CellParameters::default_lfp();
        let plant = DaeSimulator::new(p.clone(), SimConfig { steps_per_hour: 360, ..SimConfig::default() });
        let alpha = synth_fr(seed, 1, 360).remove(0);
        let start = PlantState::new(CellState::half_charged(&p), &p);
        let tr = plant.simulate(&start, &HourlyCommitment::new(f, o, l), &alpha, true);
        let mut prev = (start.cell.c_f, start.cell.delta_f);
        for (cf, d) in tr.fade.iter().zip(&tr.film) {
            prop_assert!(*cf >= prev.0 && *d >= prev.1);
            prev = (*cf, *d);
        }
    }
}
