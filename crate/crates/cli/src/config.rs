//! `AppConfig`: one TOML file with every knob, overridden by flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use frmpc_core::closed_loop::InitialState;
use frmpc_core::ocp::{fade_penalty_from_percent, lambda_from_percent, OcpConfig};
use frmpc_core::sim::SimConfig;
use frmpc_core::{CellParameters, MarketData, RunConfig, StrategyConfig, StrategyKind};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Seed of the synthetic market.
    pub seed: u64,
    pub log_level: String,
    pub paths: Paths,
    pub market: Market,
    pub plant: Plant,
    pub run: Run,
    pub strategy: Strategy,
    pub ocp: Ocp,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub params: Option<PathBuf>,
    pub fr_signal: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Market {
    /// Length of the synthetic series before it wraps around.
    pub hours: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Plant {
    pub steps_per_hour: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    pub max_hours: usize,
    pub eol_threshold: f64,
    /// Initial stoichiometry of the negative electrode.
    pub initial_soc: f64,
    pub deadline_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Strategy {
    pub kind: String,
    pub fixed_band: f64,
    pub band_step: f64,
}

/// OCP settings with the fade price and surrogate in their customary units.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ocp {
    pub horizon: usize,
    pub steps_per_hour: usize,
    pub p_charge_max: f64,
    pub p_discharge_max: f64,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub tau_l: f64,
    pub tau_u: f64,
    pub eta_l: f64,
    pub eta_u: f64,
    /// $ per % of fade.
    pub fade_penalty_per_percent: f64,
    /// % of fade per MW of band and hour.
    pub lambda_percent_per_mw: f64,
    pub flexible_load: bool,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            log_level: "warn".into(),
            paths: Paths::default(),
            market: Market::default(),
            plant: Plant::default(),
            run: Run::default(),
            strategy: Strategy::default(),
            ocp: Ocp::default(),
        }
    }
}

impl Default for Market {
    fn default() -> Self {
        Self { hours: 168 }
    }
}

impl Default for Plant {
    fn default() -> Self {
        Self { steps_per_hour: 1800 }
    }
}

impl Default for Run {
    fn default() -> Self {
        let r = RunConfig::default();
        Self {
            max_hours: r.max_hours,
            eol_threshold: r.eol_threshold,
            initial_soc: 0.5,
            deadline_s: None,
        }
    }
}

impl Default for Strategy {
    fn default() -> Self {
        let s = StrategyConfig::default();
        Self {
            kind: s.kind.label().into(),
            fixed_band: s.fixed_band,
            band_step: s.band_step,
        }
    }
}

impl Default for Ocp {
    fn default() -> Self {
        let o = OcpConfig::default();
        Self {
            horizon: o.horizon,
            steps_per_hour: 60,
            p_charge_max: o.p_charge_max,
            p_discharge_max: o.p_discharge_max,
            v_min: None,
            v_max: None,
            tau_l: o.tau_l,
            tau_u: o.tau_u,
            eta_l: o.eta_l,
            eta_u: o.eta_u,
            fade_penalty_per_percent: 12_000.0,
            lambda_percent_per_mw: 0.0024,
            flexible_load: o.flexible_load,
        }
    }
}

impl AppConfig {
    /// Reads `path`, or the defaults when `None`, and checks that referenced
    /// files exist.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: AppConfig = match path {
            None => AppConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("reading config {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
        };
        cfg.check_files()?;
        Ok(cfg)
    }

    /// Every configured input file exists.
    pub fn check_files(&self) -> Result<(), CliError> {
        let p = &self.paths;
        for (name, path) in [("params", &p.params), ("fr_signal", &p.fr_signal), ("prices", &p.prices)] {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(CliError::Config(format!("{name} file {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }

    pub fn strategy_kind(&self) -> Result<StrategyKind, CliError> {
        Ok(self.strategy.kind.parse()?)
    }

    pub fn ocp_config(&self) -> OcpConfig {
        let o = &self.ocp;
        OcpConfig {
            horizon: o.horizon,
            steps_per_hour: o.steps_per_hour,
            p_charge_max: o.p_charge_max,
            p_discharge_max: o.p_discharge_max,
            v_min: o.v_min.unwrap_or(f64::NEG_INFINITY),
            v_max: o.v_max.unwrap_or(f64::INFINITY),
            tau_l: o.tau_l,
            tau_u: o.tau_u,
            eta_l: o.eta_l,
            eta_u: o.eta_u,
            fade_penalty: fade_penalty_from_percent(o.fade_penalty_per_percent),
            lambda: lambda_from_percent(o.lambda_percent_per_mw),
            flexible_load: o.flexible_load,
        }
    }

    pub fn run_config(&self, params: &CellParameters) -> Result<RunConfig, CliError> {
        let r = &self.run;
        if !(0.0..=1.0).contains(&r.initial_soc) {
            return Err(CliError::Config(format!("initial_soc {} outside [0, 1]", r.initial_soc)));
        }
        let deadline = match r.deadline_s {
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => return Err(CliError::Config(format!("deadline_s must be positive, got {s}"))),
            None => None,
        };
        let cfg = RunConfig {
            max_hours: r.max_hours,
            eol_threshold: r.eol_threshold,
            initial: InitialState::Cell(frmpc_core::CellState::fresh(params, r.initial_soc)),
            strategy: StrategyConfig {
                kind: self.strategy_kind()?,
                fixed_band: self.strategy.fixed_band,
                band_step: self.strategy.band_step,
                ocp: self.ocp_config(),
            },
            deadline,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The plant shares the energy window of the OCPs.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        if self.plant.steps_per_hour == 0 {
            return Err(CliError::Config("plant steps_per_hour must be positive".into()));
        }
        Ok(SimConfig {
            steps_per_hour: self.plant.steps_per_hour,
            tau_l: self.ocp.tau_l,
            tau_u: self.ocp.tau_u,
            stop_on_violation: false,
        })
    }

    /// Parameter file if configured, else the shipped set.
    pub fn params(&self) -> Result<CellParameters, CliError> {
        match &self.paths.params {
            Some(p) => Ok(CellParameters::from_path(p)?),
            None => Ok(CellParameters::default_lfp()),
        }
    }

    /// Market files if configured, else the seeded synthetic market at the
    /// plant resolution.
    pub fn market(&self) -> Result<MarketData, CliError> {
        match (&self.paths.fr_signal, &self.paths.prices) {
            (Some(fr), Some(pr)) => Ok(MarketData::load(fr, pr)?),
            (Some(_), None) | (None, Some(_)) => Err(CliError::Config(
                "the FR signal and price files must be given together".into(),
            )),
            (None, None) => {
                if self.market.hours == 0 {
                    return Err(CliError::Config("market hours must be positive".into()));
                }
                Ok(MarketData::synthetic(self.seed, self.market.hours, self.plant.steps_per_hour))
            }
        }
    }
}
