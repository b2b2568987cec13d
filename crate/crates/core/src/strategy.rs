//! Dispatch policies. Each hour a policy emits the commitment for the next
//! hour; the band-adjustment loop then shrinks the FR band until the plant
//! can honour it.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use frmpc_solvers::{solve_lp, solve_nlp, IpmOptions, SolveStatus};
use log::warn;

use crate::error::StrategyError;
use crate::market::MarketData;
use crate::ocp::{build_lf_fade_lp, build_lf_lp, HfNlp, OcpConfig};
use crate::params::CellParameters;
use crate::sim::{HourTrace, HourlyCommitment, Plant, PlantState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// Constant band with energy replenishment by the `ΔE` rule.
    FixedBand,
    /// Energy-balance LP without degradation.
    LfMpc,
    /// Energy-balance LP with the band-proportional fade surrogate.
    LfFadeMpc,
    /// NLP over the full cell model.
    HfMpc,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [Self::FixedBand, Self::LfMpc, Self::LfFadeMpc, Self::HfMpc];

    pub fn label(&self) -> &'static str {
        match self {
            Self::FixedBand => "fixed-band",
            Self::LfMpc => "lf-mpc",
            Self::LfFadeMpc => "lf-fade-mpc",
            Self::HfMpc => "hf-mpc",
        }
    }

    pub fn is_mpc(&self) -> bool {
        !matches!(self, Self::FixedBand)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.label() == norm)
            .ok_or_else(|| StrategyError::Config(format!("unknown strategy '{s}' (expected fixed-band, lf-mpc, lf-fade-mpc or hf-mpc)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Band of the fixed-band policy, MW.
    pub fixed_band: f64,
    /// Decrement `ΔF` of the band-adjustment loop, MW.
    pub band_step: f64,
    /// Horizon, resolution and limits of the MPC problems.
    pub ocp: OcpConfig,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyKind::FixedBand,
            fixed_band: 10.0,
            band_step: 0.5,
            ocp: OcpConfig::default(),
        }
    }
}

impl StrategyConfig {
    pub fn horizon(&self) -> usize {
        self.ocp.horizon
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        self.ocp.validate()?;
        if !(self.band_step > 0.0) || !self.band_step.is_finite() {
            return Err(StrategyError::Config(format!("band step must be positive, got {}", self.band_step)));
        }
        if !(0.0..=self.ocp.p_charge_max).contains(&self.fixed_band) {
            return Err(StrategyError::Config(format!(
                "fixed band {} outside [0, {}]",
                self.fixed_band, self.ocp.p_charge_max
            )));
        }
        Ok(())
    }

    /// Worst-case number of band candidates tried by [`adjust_band`].
    pub fn max_band_candidates(&self) -> usize {
        (self.ocp.p_charge_max / self.band_step).ceil() as usize + 1
    }
}

/// Commitment that steers the energy to `η_l (1 - C_f) Ē` at the end of the
/// hour: `ΔE = E* - E_now - Σ_s α_s F / S` is bought when positive and
/// served as load when negative.
pub fn heuristic_commit(e_now: f64, cf_now: f64, band: f64, alpha: &[f64], eta_l: f64, e_max: f64) -> HourlyCommitment {
    let e_star = eta_l * (1.0 - cf_now) * e_max;
    let fr = if alpha.is_empty() {
        0.0
    } else {
        alpha.iter().sum::<f64>() * band / alpha.len() as f64
    };
    let de = e_star - e_now - fr;
    if de > 0.0 {
        HourlyCommitment::new(band, de, 0.0)
    } else if de < 0.0 {
        HourlyCommitment::new(band, 0.0, -de)
    } else {
        HourlyCommitment::new(band, 0.0, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct BandAdjustment {
    pub commitment: HourlyCommitment,
    /// Full-hour trace of `commitment`.
    pub trace: HourTrace,
    /// Plant simulations used.
    pub simulations: usize,
    /// The band was reduced from the proposed value.
    pub adjusted: bool,
    /// Even the rest commitment violates the energy window; it was applied
    /// anyway.
    pub fallback: bool,
}

impl BandAdjustment {
    /// The applied hour violates the energy window (only possible after the
    /// rest fallback).
    pub fn flagged(&self) -> bool {
        !self.trace.is_feasible()
    }
}

/// Simulates `c`; while infeasible, lowers the band by `ΔF` (recomputing
/// `O`/`L` with the `ΔE` rule) and retries. The zero-band candidate is the
/// rest commitment; if even that violates the energy window it is applied
/// anyway and the hour is flagged. At most `⌈F/ΔF⌉ + 1` simulations.
pub fn adjust_band(
    c: &HourlyCommitment,
    state: &PlantState,
    alpha: &[f64],
    cfg: &StrategyConfig,
    plant: &dyn Plant,
) -> BandAdjustment {
    let p = plant.params();
    let e_now = state.cell.energy(p);
    let cf_now = state.cell.c_f;
    let rest = HourlyCommitment::rest();
    let mut cur = c.clone();
    let mut simulations = 0;
    loop {
        // only the final answer needs a full-hour trace
        let is_rest = cur == rest;
        let trace = plant.simulate(state, &cur, alpha, !is_rest);
        simulations += 1;
        if trace.is_feasible() || is_rest {
            return BandAdjustment {
                adjusted: cur.fr_band != c.fr_band,
                fallback: is_rest && !trace.is_feasible(),
                commitment: cur,
                trace,
                simulations,
            };
        }
        let band = (cur.fr_band - cfg.band_step).max(0.0);
        cur = if band > 0.0 {
            heuristic_commit(e_now, cf_now, band, alpha, cfg.ocp.eta_l, p.pack.e_max)
        } else {
            rest.clone()
        };
    }
}

/// Output of one policy evaluation.
#[derive(Debug, Clone)]
pub struct Decision {
    /// Commitments for every hour of the horizon; only the first is applied.
    pub plan: Vec<HourlyCommitment>,
    /// Optimiser outcome (MPC policies only).
    pub status: Option<SolveStatus>,
    pub solve_time: Duration,
    /// Why the plan fell back to a zero commitment, if it did.
    pub note: Option<String>,
}

impl Decision {
    pub fn next(&self) -> &HourlyCommitment {
        &self.plan[0]
    }
}

/// Repeats a per-step load profile from `S_ocp` to the plant resolution.
fn expand_profile(mut c: HourlyCommitment, plant_steps: usize) -> Result<HourlyCommitment, StrategyError> {
    if let Some(prof) = c.load_profile.take() {
        if prof.is_empty() || plant_steps % prof.len() != 0 {
            return Err(StrategyError::Config(format!(
                "{} load steps cannot be expanded to {plant_steps} plant steps",
                prof.len()
            )));
        }
        let rep = plant_steps / prof.len();
        c.load_profile = Some(prof.iter().flat_map(|&v| std::iter::repeat_n(v, rep)).collect());
    }
    Ok(c)
}

fn clamp_band(mut c: HourlyCommitment, cfg: &OcpConfig) -> HourlyCommitment {
    c.fr_band = c.fr_band.clamp(0.0, cfg.p_charge_max);
    c
}

/// Solves the MPC problem of `cfg.kind` from the current plant state at hour
/// `t`. LF policies only see the stored energy and the fade; the HF policy
/// uses the full cell state. Solver failures give a zero plan with a note.
pub fn mpc_commit(
    state: &PlantState,
    t: usize,
    data: &MarketData,
    p: &CellParameters,
    cfg: &StrategyConfig,
) -> Result<Decision, StrategyError> {
    let n = cfg.horizon();
    let w = data.window(t, n);
    let started = Instant::now();
    let (status, plan) = match cfg.kind {
        StrategyKind::FixedBand => {
            return Err(StrategyError::Config("fixed-band is not an MPC policy".into()));
        }
        StrategyKind::LfMpc | StrategyKind::LfFadeMpc => {
            let e = state.cell.energy(p);
            let build = if cfg.kind == StrategyKind::LfMpc {
                build_lf_lp
            } else {
                build_lf_fade_lp
            };
            let prob = build(&w, e, state.cell.c_f, p.pack.e_max, &cfg.ocp)?;
            let rep = solve_lp(&prob.lp, None);
            let plan: Vec<_> = (0..n).map(|k| prob.commitment(&rep.x, k)).collect();
            (rep.status, plan)
        }
        StrategyKind::HfMpc => {
            let nlp = HfNlp::build(&w, &state.cell, &state.alg, p, &cfg.ocp)?;
            let rep = solve_nlp(&nlp, &IpmOptions::default(), None);
            let plan: Vec<_> = (0..n).map(|k| nlp.commitment(&rep.x, k)).collect();
            (rep.status, plan)
        }
    };
    let solve_time = started.elapsed();
    if status != SolveStatus::Optimal {
        let note = format!("{} solve at hour {t}: {status}; committing nothing", cfg.kind);
        warn!("{note}");
        return Ok(Decision {
            plan: vec![HourlyCommitment::rest(); n],
            status: Some(status),
            solve_time,
            note: Some(note),
        });
    }
    let steps = data.steps_per_hour();
    let plan = plan
        .into_iter()
        .map(|c| expand_profile(clamp_band(c, &cfg.ocp), steps))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Decision {
        plan,
        status: Some(status),
        solve_time,
        note: None,
    })
}

/// Policy evaluation for hour `t` from the current plant state.
pub fn decide(
    state: &PlantState,
    t: usize,
    data: &MarketData,
    p: &CellParameters,
    cfg: &StrategyConfig,
) -> Result<Decision, StrategyError> {
    match cfg.kind {
        StrategyKind::FixedBand => {
            let c = heuristic_commit(
                state.cell.energy(p),
                state.cell.c_f,
                cfg.fixed_band,
                data.alpha_at(t),
                cfg.ocp.eta_l,
                p.pack.e_max,
            );
            Ok(Decision {
                plan: vec![c],
                status: None,
                solve_time: Duration::ZERO,
                note: None,
            })
        }
        _ => mpc_commit(state, t, data, p, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kinds() {
        for k in StrategyKind::ALL {
            assert_eq!(k.label().parse::<StrategyKind>().unwrap(), k);
        }
        assert_eq!("HF_MPC".parse::<StrategyKind>().unwrap(), StrategyKind::HfMpc);
        assert!("mpc".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn candidate_bound() {
        assert_eq!(StrategyConfig::default().max_band_candidates(), 21);
    }

    #[test]
    fn expands_flexible_load() {
        let mut c = HourlyCommitment::new(1.0, 0.0, 1.5);
        c.load_profile = Some(vec![1.0, 2.0]);
        let c = expand_profile(c, 6).unwrap();
        assert_eq!(c.load_profile.unwrap(), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        let mut c = HourlyCommitment::new(1.0, 0.0, 1.0);
        c.load_profile = Some(vec![1.0; 4]);
        assert!(expand_profile(c, 6).is_err());
    }
}
