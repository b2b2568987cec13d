//! Energy-balance LPs.

use frmpc_solvers::LinearProgram;

use super::{bound, resample, OcpConfig};
use crate::error::OcpError;
use crate::market::MarketWindow;
use crate::sim::HourlyCommitment;

/// Column layout of the LF LPs. Per hour: `F, O`, the load (one column, or
/// one per step when flexible), `(E_s, P_s)` for every step and, for the
/// fade variant, the fade at the end of the hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfLayout {
    pub horizon: usize,
    pub steps: usize,
    pub flexible: bool,
    pub fade: bool,
}

impl LfLayout {
    fn loads(&self) -> usize {
        if self.flexible {
            self.steps
        } else {
            1
        }
    }

    fn block(&self) -> usize {
        2 + self.loads() + 2 * self.steps + usize::from(self.fade)
    }

    pub fn f(&self, k: usize) -> usize {
        k * self.block()
    }

    pub fn o(&self, k: usize) -> usize {
        k * self.block() + 1
    }

    pub fn l(&self, k: usize, s: usize) -> usize {
        k * self.block() + 2 + if self.flexible { s } else { 0 }
    }

    pub fn e(&self, k: usize, s: usize) -> usize {
        k * self.block() + 2 + self.loads() + 2 * s
    }

    pub fn p(&self, k: usize, s: usize) -> usize {
        self.e(k, s) + 1
    }

    /// Fade added by the end of hour `k`, in units of [`LF_CF_UNIT`] (fade
    /// variant only).
    pub fn cf(&self, k: usize) -> usize {
        assert!(self.fade);
        k * self.block() + 2 + self.loads() + 2 * self.steps
    }

    pub fn num_vars(&self) -> usize {
        self.horizon * self.block()
    }
}

/// Scale of the fade columns; keeps their cost coefficient near one.
pub const LF_CF_UNIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LfProblem {
    pub lp: LinearProgram,
    pub layout: LfLayout,
    /// Constant dropped from the LP objective.
    pub objective_offset: f64,
    pub fr_price: Vec<f64>,
    pub energy_price: Vec<f64>,
}

impl LfProblem {
    /// Objective value (negated profit plus fade penalty) at `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.lp.c.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_offset
    }

    /// Market profit `Σ π_f F - π_e O` at `x`.
    pub fn profit(&self, x: &[f64]) -> f64 {
        (0..self.layout.horizon)
            .map(|k| self.fr_price[k] * x[self.layout.f(k)] - self.energy_price[k] * x[self.layout.o(k)])
            .sum()
    }

    /// Fade added over the first `k + 1` hours (fade variant only).
    pub fn fade(&self, x: &[f64], k: usize) -> f64 {
        x[self.layout.cf(k)] * LF_CF_UNIT
    }

    /// Commitments of hour `k`; a flexible load comes back per OCP step.
    pub fn commitment(&self, x: &[f64], k: usize) -> HourlyCommitment {
        let ly = &self.layout;
        let clip = |v: f64| v.max(0.0);
        let mut c = HourlyCommitment::new(clip(x[ly.f(k)]), clip(x[ly.o(k)]), clip(x[ly.l(k, 0)]));
        if ly.flexible {
            let prof: Vec<f64> = (0..ly.steps).map(|s| clip(x[ly.l(k, s)])).collect();
            c.load = prof.iter().sum::<f64>() / prof.len() as f64;
            c.load_profile = Some(prof);
        }
        c
    }
}

/// Energy-balance LP without fade: maximise `Σ π_f F - π_e O` subject to
/// `E_{k,s} = E_{k,s-1} + P_{k,s} / S_ocp` with the energy window frozen at
/// the current fade.
pub fn build_lf_lp(w: &MarketWindow, e0: f64, cf0: f64, e_max: f64, cfg: &OcpConfig) -> Result<LfProblem, OcpError> {
    build(w, e0, cf0, e_max, cfg, false)
}

/// As [`build_lf_lp`] plus hourly fade states `C_k = C_{k-1} + λ F_k` and
/// the terminal penalty `π_Cf (C_N - C_0)`. The fade columns hold `C_k - C_0`.
pub fn build_lf_fade_lp(
    w: &MarketWindow,
    e0: f64,
    cf0: f64,
    e_max: f64,
    cfg: &OcpConfig,
) -> Result<LfProblem, OcpError> {
    build(w, e0, cf0, e_max, cfg, true)
}

fn build(w: &MarketWindow, e0: f64, cf0: f64, e_max: f64, cfg: &OcpConfig, fade: bool) -> Result<LfProblem, OcpError> {
    cfg.validate()?;
    if w.len() != cfg.horizon {
        return Err(OcpError::Config(format!(
            "window has {} hours, horizon is {}",
            w.len(),
            cfg.horizon
        )));
    }
    let n = cfg.horizon;
    let s_count = cfg.steps_per_hour;
    let ly = LfLayout {
        horizon: n,
        steps: s_count,
        flexible: cfg.flexible_load,
        fade,
    };
    let mut lp = LinearProgram::new(ly.num_vars());
    let dt = 1.0 / s_count as f64;
    let cap = (1.0 - cf0) * e_max;
    for k in 0..n {
        let alpha = resample(w.alpha[k], s_count)?;
        lp.c[ly.f(k)] = -w.fr_price[k];
        lp.c[ly.o(k)] = w.energy_price[k];
        lp.col_lower[ly.f(k)] = 0.0;
        lp.col_upper[ly.f(k)] = bound(cfg.p_charge_max);
        lp.col_lower[ly.o(k)] = 0.0;
        lp.col_upper[ly.o(k)] = bound(cfg.p_charge_max);
        for s in 0..ly.loads() {
            lp.col_lower[ly.l(k, s)] = 0.0;
            lp.col_upper[ly.l(k, s)] = bound(cfg.p_discharge_max);
        }
        for (s, &a) in alpha.iter().enumerate() {
            let (e, p) = (ly.e(k, s), ly.p(k, s));
            lp.col_lower[e] = cfg.tau_l * cap;
            lp.col_upper[e] = cfg.tau_u * cap;
            lp.col_lower[p] = -bound(cfg.p_discharge_max);
            lp.col_upper[p] = bound(cfg.p_charge_max);
            if k == 0 && s == 0 {
                lp.add_row(&[(e, 1.0), (p, -dt)], e0, e0);
            } else {
                let prev = if s == 0 { ly.e(k - 1, s_count - 1) } else { ly.e(k, s - 1) };
                lp.add_row(&[(e, 1.0), (prev, -1.0), (p, -dt)], 0.0, 0.0);
            }
            lp.add_row(&[(p, 1.0), (ly.f(k), -a), (ly.o(k), -1.0), (ly.l(k, s), 1.0)], 0.0, 0.0);
        }
        if fade {
            let c = ly.cf(k);
            let g = -cfg.lambda / LF_CF_UNIT;
            if k == 0 {
                lp.add_row(&[(c, 1.0), (ly.f(k), g)], 0.0, 0.0);
            } else {
                lp.add_row(&[(c, 1.0), (ly.cf(k - 1), -1.0), (ly.f(k), g)], 0.0, 0.0);
            }
        }
    }
    let last = ly.e(n - 1, s_count - 1);
    lp.col_lower[last] = lp.col_lower[last].max(cfg.eta_l * cap);
    lp.col_upper[last] = lp.col_upper[last].min(cfg.eta_u * cap);
    if fade {
        lp.c[ly.cf(n - 1)] = cfg.fade_penalty * LF_CF_UNIT;
    }
    Ok(LfProblem {
        lp,
        layout: ly,
        objective_offset: 0.0,
        fr_price: w.fr_price.clone(),
        energy_price: w.energy_price.clone(),
    })
}
