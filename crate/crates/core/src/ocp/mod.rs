//! Direct transcriptions of the dispatch problems over an `N`-hour horizon:
//! the high-fidelity NLP with the full cell model, the energy-balance LP,
//! and the LP with a band-proportional fade surrogate.

mod hf;
mod lf;

pub use hf::{hf_num_cons, hf_num_vars, HfLayout, HfNlp, HF_STEP_ROWS, HF_STEP_VARS};
pub use lf::{build_lf_fade_lp, build_lf_lp, LfLayout, LfProblem, LF_CF_UNIT};

use crate::error::OcpError;

#[derive(Debug, Clone, PartialEq)]
pub struct OcpConfig {
    /// Horizon `N`, hours.
    pub horizon: usize,
    /// Transcription steps per hour `S_ocp`.
    pub steps_per_hour: usize,
    /// Maximum charging rate `P̄`, MW.
    pub p_charge_max: f64,
    /// Maximum discharging rate `P̲`, MW.
    pub p_discharge_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub tau_l: f64,
    pub tau_u: f64,
    /// Terminal energy band.
    pub eta_l: f64,
    pub eta_u: f64,
    /// Terminal fade price, $ per unit fade fraction.
    pub fade_penalty: f64,
    /// Fade fraction per MW of band and hour.
    pub lambda: f64,
    /// Load chosen per step instead of per hour.
    pub flexible_load: bool,
}

/// `$ / %` to `$ / unit fade`.
pub fn fade_penalty_from_percent(dollars_per_percent: f64) -> f64 {
    dollars_per_percent * 100.0
}

/// `% / MW` to `fraction / MW`.
pub fn lambda_from_percent(percent_per_mw: f64) -> f64 {
    percent_per_mw / 100.0
}

impl Default for OcpConfig {
    fn default() -> Self {
        Self {
            horizon: 1,
            steps_per_hour: 1800,
            p_charge_max: 10.0,
            p_discharge_max: 10.0,
            v_min: f64::NEG_INFINITY,
            v_max: f64::INFINITY,
            tau_l: 0.1,
            tau_u: 0.9,
            eta_l: 0.5,
            eta_u: 0.5,
            fade_penalty: fade_penalty_from_percent(12_000.0),
            lambda: lambda_from_percent(0.0024),
            flexible_load: false,
        }
    }
}

impl OcpConfig {
    pub fn validate(&self) -> Result<(), OcpError> {
        let err = |m: String| Err(OcpError::Config(m));
        if self.horizon == 0 || self.steps_per_hour == 0 {
            return err("horizon and steps per hour must be positive".into());
        }
        if !(0.0 <= self.tau_l && self.tau_l < self.tau_u && self.tau_u <= 1.0) {
            return err(format!("need 0 <= tau_l < tau_u <= 1, got [{}, {}]", self.tau_l, self.tau_u));
        }
        if !(0.0 <= self.eta_l && self.eta_l <= self.eta_u && self.eta_u <= 1.0) {
            return err(format!("need 0 <= eta_l <= eta_u <= 1, got [{}, {}]", self.eta_l, self.eta_u));
        }
        if self.eta_l < self.tau_l || self.eta_u > self.tau_u {
            return err(format!(
                "terminal band [{}, {}] outside the energy band [{}, {}]",
                self.eta_l, self.eta_u, self.tau_l, self.tau_u
            ));
        }
        if !(self.p_charge_max >= 0.0 && self.p_discharge_max >= 0.0) {
            return err("power limits must be nonnegative".into());
        }
        if !(self.fade_penalty >= 0.0) || !(self.lambda >= 0.0) {
            return err("fade penalty and lambda must be nonnegative".into());
        }
        if self.v_min.is_nan() || self.v_max.is_nan() || self.v_min > self.v_max {
            return err(format!("voltage bounds [{}, {}] are inconsistent", self.v_min, self.v_max));
        }
        Ok(())
    }
}

/// Block-averages one hour of FR signal down to `steps` values.
pub fn resample(alpha: &[f64], steps: usize) -> Result<Vec<f64>, OcpError> {
    if steps == 0 || alpha.len() % steps != 0 {
        return Err(OcpError::Config(format!(
            "{} FR samples per hour cannot be split into {steps} steps",
            alpha.len()
        )));
    }
    let b = alpha.len() / steps;
    Ok(alpha.chunks(b).map(|c| c.iter().sum::<f64>() / b as f64).collect())
}

/// Finite bound or the solver's infinity.
pub(crate) fn bound(v: f64) -> f64 {
    v.clamp(-frmpc_solvers::INF, frmpc_solvers::INF)
}
