//! Cell and pack parameters.
//!
//! The file format is TOML with sections `electrode.n`, `electrode.p`,
//! `side_reaction` and `pack`; see `data/lfp_graphite.toml` for the shipped
//! default and the unit conventions.

use std::path::Path;

use serde::Deserialize;

use crate::error::ParamError;
use crate::ocv::OcvCurve;

pub const DEFAULT_PARAMS_TOML: &str = include_str!("../data/lfp_graphite.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileElectrode {
    diffusivity: f64,
    radius: f64,
    rate_constant: f64,
    max_concentration: f64,
    area: f64,
    #[serde(default)]
    theta_at_empty: Option<f64>,
    ocv_theta: Vec<f64>,
    ocv: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileElectrodes {
    n: FileElectrode,
    p: FileElectrode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSide {
    exchange_current: f64,
    reference_potential: f64,
    molar_mass: f64,
    density: f64,
    conductivity: f64,
    film_resistance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePack {
    cell_capacity: f64,
    cell_energy: f64,
    n_cells: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    temperature: f64,
    electrolyte_concentration: f64,
    electrode: FileElectrodes,
    side_reaction: FileSide,
    pack: FilePack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Electrode {
    /// Solid-phase diffusivity, m²/s.
    pub diffusivity: f64,
    /// Particle radius, m.
    pub radius: f64,
    pub rate_constant: f64,
    /// mol/m³
    pub c_max: f64,
    /// Electroactive area of the whole pack, m².
    pub area: f64,
    pub ocv: OcvCurve,
}

impl Electrode {
    /// Lithium capacity of the electrode, A·s (full stoichiometry swing).
    pub fn capacity(&self) -> f64 {
        self.c_max * self.area * self.radius * crate::cell::FARADAY / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideReaction {
    /// A/m²
    pub i0: f64,
    /// V
    pub u_ref: f64,
    /// kg/mol
    pub molar_mass: f64,
    /// kg/m³
    pub density: f64,
    /// S/m
    pub conductivity: f64,
    /// Ω·m²
    pub r_sei: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pack {
    pub n_cells: f64,
    /// Pack charge capacity, A·s.
    pub q_max: f64,
    /// Pack energy capacity, MWh.
    pub e_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellParameters {
    pub n: Electrode,
    pub p: Electrode,
    /// Electrolyte concentration, mol/m³.
    pub c_e: f64,
    /// K
    pub temperature: f64,
    pub side: SideReaction,
    pub pack: Pack,
    /// Positive stoichiometry when the negative electrode is empty.
    pub theta_p_at_empty: f64,
}

fn positive(name: &str, v: f64) -> Result<f64, ParamError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ParamError::Invalid {
            name: name.into(),
            reason: format!("must be finite and > 0, got {v}"),
        })
    }
}

impl CellParameters {
    pub fn from_toml_str(s: &str) -> Result<Self, ParamError> {
        let f: ParamFile = toml::from_str(s)?;
        let nc = positive("pack.n_cells", f.pack.n_cells)?;
        let electrode = |tag: &str, e: &FileElectrode| -> Result<Electrode, ParamError> {
            let name = |k: &str| format!("electrode.{tag}.{k}");
            Ok(Electrode {
                diffusivity: positive(&name("diffusivity"), e.diffusivity)?,
                radius: positive(&name("radius"), e.radius)?,
                rate_constant: positive(&name("rate_constant"), e.rate_constant)?,
                c_max: positive(&name("max_concentration"), e.max_concentration)?,
                area: positive(&name("area"), e.area)? * nc,
                ocv: OcvCurve::new(e.ocv_theta.clone(), e.ocv.clone())
                    .map_err(|err| ParamError::Ocv(format!("electrode.{tag}: {err}")))?,
            })
        };
        let theta_p_at_empty = f.electrode.p.theta_at_empty.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&theta_p_at_empty) {
            return Err(ParamError::Invalid {
                name: "electrode.p.theta_at_empty".into(),
                reason: "must lie in [0, 1]".into(),
            });
        }
        let i0 = f.side_reaction.exchange_current;
        if !(i0.is_finite() && i0 >= 0.0) {
            return Err(ParamError::Invalid {
                name: "side_reaction.exchange_current".into(),
                reason: "must be finite and >= 0".into(),
            });
        }
        let params = Self {
            n: electrode("n", &f.electrode.n)?,
            p: electrode("p", &f.electrode.p)?,
            c_e: positive("electrolyte_concentration", f.electrolyte_concentration)?,
            temperature: positive("temperature", f.temperature)?,
            side: SideReaction {
                i0,
                u_ref: f.side_reaction.reference_potential,
                molar_mass: positive("side_reaction.molar_mass", f.side_reaction.molar_mass)?,
                density: positive("side_reaction.density", f.side_reaction.density)?,
                conductivity: positive("side_reaction.conductivity", f.side_reaction.conductivity)?,
                r_sei: positive("side_reaction.film_resistance", f.side_reaction.film_resistance)?,
            },
            pack: Pack {
                n_cells: nc,
                q_max: positive("pack.cell_capacity", f.pack.cell_capacity)? * nc,
                e_max: positive("pack.cell_energy", f.pack.cell_energy)? * nc,
            },
            theta_p_at_empty,
        };
        if theta_p_at_empty - params.capacity_ratio() < 0.0 {
            return Err(ParamError::Invalid {
                name: "electrode.p.theta_at_empty".into(),
                reason: "positive electrode cannot absorb a full negative charge".into(),
            });
        }
        Ok(params)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ParamError> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    /// The shipped LiFePO4/graphite set.
    pub fn default_lfp() -> Self {
        Self::from_toml_str(DEFAULT_PARAMS_TOML).expect("shipped parameter file is valid")
    }

    /// Rescales the pack to a new cell count.
    pub fn with_n_cells(mut self, n_cells: f64) -> Self {
        let r = n_cells / self.pack.n_cells;
        self.n.area *= r;
        self.p.area *= r;
        self.pack.q_max *= r;
        self.pack.e_max *= r;
        self.pack.n_cells = n_cells;
        self
    }

    pub fn without_side_reaction(mut self) -> Self {
        self.side.i0 = 0.0;
        self
    }

    /// Negative/positive capacity ratio.
    pub fn capacity_ratio(&self) -> f64 {
        self.n.capacity() / self.p.capacity()
    }

    /// Positive stoichiometry matching a negative stoichiometry under
    /// lithium conservation.
    pub fn theta_p_for(&self, theta_n: f64) -> f64 {
        self.theta_p_at_empty - theta_n * self.capacity_ratio()
    }

    /// Current that moves `q_max` in one hour, A.
    pub fn one_c_current(&self) -> f64 {
        self.pack.q_max / 3600.0
    }

    /// Thermal voltage `R T / F`.
    pub fn thermal_voltage(&self) -> f64 {
        crate::cell::GAS_CONSTANT * self.temperature / crate::cell::FARADAY
    }
}
