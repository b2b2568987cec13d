//! Hour-level plant: steps the cell model at FR-signal resolution under a
//! fixed hourly commitment and checks the energy window.

use crate::cell::{self, AlgebraicState, CellState};
use crate::params::CellParameters;

/// Market decisions for one hour, all in MW.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HourlyCommitment {
    /// FR capacity band `F`.
    pub fr_band: f64,
    /// Day-ahead purchase `O`.
    pub purchase: f64,
    /// Committed load `L`.
    pub load: f64,
    /// Per-step load replacing `load` when the load is flexible.
    pub load_profile: Option<Vec<f64>>,
}

impl HourlyCommitment {
    pub fn new(fr_band: f64, purchase: f64, load: f64) -> Self {
        Self {
            fr_band,
            purchase,
            load,
            load_profile: None,
        }
    }

    pub fn rest() -> Self {
        Self::default()
    }

    pub fn load_at(&self, s: usize) -> f64 {
        match &self.load_profile {
            Some(l) => l[s],
            None => self.load,
        }
    }

    /// Net charging power `P_s = α_s F + O - L_s`.
    pub fn power_at(&self, s: usize, alpha: f64) -> f64 {
        alpha * self.fr_band + self.purchase - self.load_at(s)
    }

    /// Mean load over the hour, MW.
    pub fn mean_load(&self) -> f64 {
        match &self.load_profile {
            Some(l) if !l.is_empty() => l.iter().sum::<f64>() / l.len() as f64,
            _ => self.load,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub steps_per_hour: usize,
    pub tau_l: f64,
    pub tau_u: f64,
    /// Stop stepping at the first energy-window violation.
    pub stop_on_violation: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps_per_hour: 1800,
            tau_l: 0.1,
            tau_u: 0.9,
            stop_on_violation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible,
    OverCharge { step: usize },
    OverDischarge { step: usize },
    SolverFailure { step: usize, cause: String },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Feasibility::Feasible => "feasible",
            Feasibility::OverCharge { .. } => "over_charge",
            Feasibility::OverDischarge { .. } => "over_discharge",
            Feasibility::SolverFailure { .. } => "solver_failure",
        }
    }
}

/// Full plant state carried between hours: the differential state and the
/// last algebraic point (a warm start for the next step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub cell: CellState,
    pub alg: AlgebraicState,
}

impl PlantState {
    pub fn new(cell: CellState, p: &CellParameters) -> Self {
        Self {
            cell,
            alg: AlgebraicState::open_circuit(&cell, p),
        }
    }
}

/// Per-step record of one simulated hour. Index `s` holds the values at the
/// end of step `s`; the bounds use the fade at the start of that step.
#[derive(Debug, Clone, PartialEq)]
pub struct HourTrace {
    pub power: Vec<f64>,
    pub energy: Vec<f64>,
    pub voltage: Vec<f64>,
    pub fade_rate: Vec<f64>,
    pub fade: Vec<f64>,
    pub film: Vec<f64>,
    pub energy_lower: Vec<f64>,
    pub energy_upper: Vec<f64>,
    pub start: PlantState,
    pub end: PlantState,
    pub verdict: Feasibility,
    /// `O` over the hour, MWh.
    pub purchased_mwh: f64,
    /// `Σ α_s F / S`, MWh.
    pub fr_energy_mwh: f64,
    pub steps_per_hour: usize,
}

impl HourTrace {
    pub fn is_feasible(&self) -> bool {
        self.verdict.is_feasible()
    }

    pub fn fade_increment(&self) -> f64 {
        self.end.cell.c_f - self.start.cell.c_f
    }
}

/// Verdict recomputed from the recorded energies and bounds (inclusive).
/// A solver failure recorded in the trace is preserved.
pub fn check_feasibility(trace: &HourTrace) -> Feasibility {
    if let Feasibility::SolverFailure { .. } = trace.verdict {
        return trace.verdict.clone();
    }
    for s in 0..trace.energy.len() {
        if trace.energy[s] > trace.energy_upper[s] {
            return Feasibility::OverCharge { step: s };
        }
        if trace.energy[s] < trace.energy_lower[s] {
            return Feasibility::OverDischarge { step: s };
        }
    }
    Feasibility::Feasible
}

pub trait Plant: Sync {
    fn params(&self) -> &CellParameters;
    fn config(&self) -> &SimConfig;
    fn simulate(&self, start: &PlantState, c: &HourlyCommitment, alpha: &[f64], stop_on_violation: bool) -> HourTrace;

    fn steps_per_hour(&self) -> usize {
        self.config().steps_per_hour
    }
}

fn empty_trace(start: &PlantState, c: &HourlyCommitment, alpha: &[f64], s: usize) -> HourTrace {
    HourTrace {
        power: Vec::with_capacity(s),
        energy: Vec::with_capacity(s),
        voltage: Vec::with_capacity(s),
        fade_rate: Vec::with_capacity(s),
        fade: Vec::with_capacity(s),
        film: Vec::with_capacity(s),
        energy_lower: Vec::with_capacity(s),
        energy_upper: Vec::with_capacity(s),
        start: *start,
        end: *start,
        verdict: Feasibility::Feasible,
        purchased_mwh: c.purchase,
        fr_energy_mwh: alpha.iter().map(|a| a * c.fr_band).sum::<f64>() / s as f64,
        steps_per_hour: s,
    }
}

/// The electrochemical plant.
#[derive(Debug, Clone)]
pub struct DaeSimulator {
    pub params: CellParameters,
    pub config: SimConfig,
}

impl DaeSimulator {
    pub fn new(params: CellParameters, config: SimConfig) -> Self {
        Self { params, config }
    }
}

impl Plant for DaeSimulator {
    fn params(&self) -> &CellParameters {
        &self.params
    }

    fn config(&self) -> &SimConfig {
        &self.config
    }

    fn simulate(&self, start: &PlantState, c: &HourlyCommitment, alpha: &[f64], stop_on_violation: bool) -> HourTrace {
        simulate_hour(start, c, alpha, &self.config, &self.params, stop_on_violation)
    }
}

/// Simulates one committed hour with `dt = 3600 / S` seconds.
pub fn simulate_hour(
    start: &PlantState,
    c: &HourlyCommitment,
    alpha: &[f64],
    cfg: &SimConfig,
    p: &CellParameters,
    stop_on_violation: bool,
) -> HourTrace {
    let s_count = cfg.steps_per_hour;
    assert_eq!(alpha.len(), s_count, "FR signal slice must have one value per plant step");
    let dt = 3600.0 / s_count as f64;
    let e_max = p.pack.e_max;
    let mut tr = empty_trace(start, c, alpha, s_count);
    let mut state = *start;
    for (s, &a) in alpha.iter().enumerate() {
        let power = c.power_at(s, a);
        let lo = cfg.tau_l * (1.0 - state.cell.c_f) * e_max;
        let hi = cfg.tau_u * (1.0 - state.cell.c_f) * e_max;
        match cell::step(&state.cell, power, dt, p, &state.alg) {
            Ok((x, alg)) => {
                let out = cell::outputs(&x, &alg, p);
                tr.power.push(power);
                tr.energy.push(out.energy);
                tr.voltage.push(out.voltage);
                tr.fade_rate.push(out.fade_rate);
                tr.fade.push(x.c_f);
                tr.film.push(x.delta_f);
                tr.energy_lower.push(lo);
                tr.energy_upper.push(hi);
                state = PlantState { cell: x, alg };
                if tr.verdict.is_feasible() {
                    if out.energy > hi {
                        tr.verdict = Feasibility::OverCharge { step: s };
                    } else if out.energy < lo {
                        tr.verdict = Feasibility::OverDischarge { step: s };
                    }
                    if !tr.verdict.is_feasible() && stop_on_violation {
                        break;
                    }
                }
            }
            Err(e) => {
                if tr.verdict.is_feasible() {
                    tr.verdict = Feasibility::SolverFailure {
                        step: s,
                        cause: e.to_string(),
                    };
                }
                break;
            }
        }
    }
    tr.end = state;
    tr
}

/// Plant stub with linear energy bookkeeping and a fixed fade per hour,
/// used to test the closed-loop protocol independently of the cell model.
#[derive(Debug, Clone)]
pub struct ConstantFadePlant {
    pub params: CellParameters,
    pub config: SimConfig,
    pub fade_per_hour: f64,
}

impl Plant for ConstantFadePlant {
    fn params(&self) -> &CellParameters {
        &self.params
    }

    fn config(&self) -> &SimConfig {
        &self.config
    }

    fn simulate(&self, start: &PlantState, c: &HourlyCommitment, alpha: &[f64], stop_on_violation: bool) -> HourTrace {
        let s_count = self.config.steps_per_hour;
        assert_eq!(alpha.len(), s_count);
        let p = &self.params;
        let e_max = p.pack.e_max;
        let mut tr = empty_trace(start, c, alpha, s_count);
        let mut x = start.cell;
        let d_fade = self.fade_per_hour / s_count as f64;
        for (s, &a) in alpha.iter().enumerate() {
            // the hour ends exactly `fade_per_hour` above its start
            let c_f = if s + 1 == s_count {
                start.cell.c_f + self.fade_per_hour
            } else {
                start.cell.c_f + d_fade * (s + 1) as f64
            };
            let power = c.power_at(s, a);
            let lo = self.config.tau_l * (1.0 - x.c_f) * e_max;
            let hi = self.config.tau_u * (1.0 - x.c_f) * e_max;
            let e = x.energy(p) + power / s_count as f64;
            x.c_avg_n = e / e_max * p.n.c_max;
            x.c_avg_p = p.theta_p_for(e / e_max) * p.p.c_max;
            x.c_f = c_f;
            tr.power.push(power);
            tr.energy.push(e);
            tr.voltage.push(0.0);
            tr.fade_rate.push(d_fade * s_count as f64 / 3600.0);
            tr.fade.push(x.c_f);
            tr.film.push(x.delta_f);
            tr.energy_lower.push(lo);
            tr.energy_upper.push(hi);
            if tr.verdict.is_feasible() {
                if e > hi {
                    tr.verdict = Feasibility::OverCharge { step: s };
                } else if e < lo {
                    tr.verdict = Feasibility::OverDischarge { step: s };
                }
                if !tr.verdict.is_feasible() && stop_on_violation {
                    break;
                }
            }
        }
        tr.end = PlantState { cell: x, alg: start.alg };
        tr
    }
}
