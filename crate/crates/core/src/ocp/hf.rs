//! High-fidelity NLP: the cell model transcribed with backward Euler at
//! `S_ocp` steps per hour.
//!
//! Every step carries 15 scaled variables (see [`var`]) and 17 rows; the
//! rows reproduce the equations of [`crate::cell::step`] exactly, so a
//! trajectory produced by the plant at the same resolution is feasible.

use frmpc_solvers::NlpModel;

use super::{bound, resample, OcpConfig};
use crate::ad::{Dual, Real};
use crate::cell::{self, AlgebraicState, CellState, FARADAY};
use crate::error::OcpError;
use crate::market::MarketWindow;
use crate::params::CellParameters;
use crate::sim::HourlyCommitment;

pub const HF_STEP_VARS: usize = 15;
pub const HF_STEP_ROWS: usize = 17;

/// Offsets of the per-step variables.
pub mod var {
    /// `c_avg_n / c_max_n`
    pub const TN: usize = 0;
    /// `c_avg_p / c_max_p`
    pub const TP: usize = 1;
    /// Film growth since the start of the horizon, in units of 0.1 nm.
    pub const DL: usize = 2;
    /// Fade since the start of the horizon, in units of 1e-6.
    pub const CF: usize = 3;
    pub const TSN: usize = 4;
    pub const TSP: usize = 5;
    pub const PHN: usize = 6;
    pub const PHP: usize = 7;
    pub const ETN: usize = 8;
    pub const ETP: usize = 9;
    /// Applied current over the 1C current.
    pub const I: usize = 10;
    /// `J_n S_n / I_1C`
    pub const JN: usize = 11;
    /// `J_sd S_n / I_1C`, in units of 1e-6.
    pub const JSD: usize = 12;
    pub const V: usize = 13;
    /// Net power, MW.
    pub const P: usize = 14;
}

const CF_UNIT: f64 = 1e-6;
const DELTA_UNIT: f64 = 1e-10;
const JSD_UNIT: f64 = 1e-6;

/// Overpotential guard; keeps `sinh` finite during line searches.
const ETA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfLayout {
    pub horizon: usize,
    pub steps: usize,
    pub flexible: bool,
}

impl HfLayout {
    fn commits(&self) -> usize {
        2 + if self.flexible { self.steps } else { 1 }
    }

    fn block(&self) -> usize {
        self.commits() + self.steps * HF_STEP_VARS
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

    pub fn var(&self, k: usize, s: usize, off: usize) -> usize {
        k * self.block() + self.commits() + s * HF_STEP_VARS + off
    }

    pub fn row(&self, k: usize, s: usize, r: usize) -> usize {
        (k * self.steps + s) * HF_STEP_ROWS + r
    }

    pub fn num_vars(&self) -> usize {
        self.horizon * self.block()
    }

    pub fn num_cons(&self, terminal_rows: usize) -> usize {
        self.horizon * self.steps * HF_STEP_ROWS + terminal_rows
    }
}

/// `N (3 + 15 S)`, or `N (2 + 16 S)` with a per-step load.
pub fn hf_num_vars(horizon: usize, steps: usize, flexible: bool) -> usize {
    if flexible {
        horizon * (2 + 16 * steps)
    } else {
        horizon * (3 + 15 * steps)
    }
}

/// `17 N S` plus one terminal row (two when the terminal band is open).
pub fn hf_num_cons(horizon: usize, steps: usize, eta_l: f64, eta_u: f64) -> usize {
    horizon * steps * HF_STEP_ROWS + if eta_l == eta_u { 1 } else { 2 }
}

/// Model constants in the scaled variables.
#[derive(Debug, Clone)]
struct Coef {
    i1c: f64,
    jref_n: f64,
    /// dynamics: θn, θp, film, fade
    a_n: f64,
    a_p: f64,
    a_d: f64,
    a_c: f64,
    /// surface relations
    b_n: f64,
    b_p: f64,
    /// `2 i0 / jref` at unit stoichiometry factor
    kin_n: f64,
    kin_p: f64,
    vt: f64,
    /// side reaction prefactor in scaled units
    sd: f64,
    /// film drop per unit current at the horizon start, and per film unit
    r0: f64,
    r1: f64,
    u_ref: f64,
    /// MW per unit current and volt
    pw: f64,
}

impl Coef {
    fn new(p: &CellParameters, dt: f64, delta0: f64) -> Self {
        let i1c = p.one_c_current();
        let jref_n = i1c / p.n.area;
        let jref_p = i1c / p.p.area;
        let kin = |e: &crate::params::Electrode, jref: f64| {
            2.0 * FARADAY * e.rate_constant * e.c_max * p.c_e.sqrt() / jref
        };
        Self {
            i1c,
            jref_n,
            a_n: 3.0 * jref_n * dt / (p.n.radius * FARADAY * p.n.c_max),
            a_p: 3.0 * jref_p * dt / (p.p.radius * FARADAY * p.p.c_max),
            a_d: JSD_UNIT * jref_n * p.side.molar_mass * dt / (p.side.density * FARADAY * DELTA_UNIT),
            a_c: JSD_UNIT * jref_n * p.n.area * dt / (p.pack.q_max * CF_UNIT),
            b_n: jref_n * p.n.radius / (5.0 * p.n.diffusivity * FARADAY * p.n.c_max),
            b_p: jref_p * p.p.radius / (5.0 * p.p.diffusivity * FARADAY * p.p.c_max),
            kin_n: kin(&p.n, jref_n),
            kin_p: kin(&p.p, jref_p),
            vt: p.thermal_voltage(),
            sd: p.side.i0 / (jref_n * JSD_UNIT),
            r0: cell::film_resistance(delta0, p) * jref_n,
            r1: DELTA_UNIT / p.side.conductivity * jref_n,
            u_ref: p.side.u_ref,
            pw: i1c / 1e6,
        }
    }
}

/// The nonlinear parts of the step rows, written once for `f64` and duals.
struct Kernels<'a> {
    c: &'a Coef,
    p: &'a CellParameters,
}

impl Kernels<'_> {
    /// `2 i0(θs) sinh(η / 2vt) / jref` for the negative electrode.
    fn bv_n<T: Real>(&self, ts: T, eta: T) -> T {
        (ts * (-ts + 1.0)).sqrt() * self.c.kin_n * (eta * (0.5 / self.c.vt)).sinh()
    }

    fn bv_p<T: Real>(&self, ts: T, eta: T) -> T {
        (ts * (-ts + 1.0)).sqrt() * self.c.kin_p * (eta * (0.5 / self.c.vt)).sinh()
    }

    /// `U_n(θs) - R_f I / S_n` (scaled current).
    fn eta_n<T: Real>(&self, ts: T, dl: T, i: T) -> T {
        self.p.n.ocv.eval_real(ts) - (dl * self.c.r1 + self.c.r0) * i
    }

    fn eta_p<T: Real>(&self, ts: T) -> T {
        self.p.p.ocv.eval_real(ts)
    }

    /// `i0_sd exp(-η_sd / vt)` in the scaled side-current unit.
    fn side<T: Real>(&self, phn: T, dl: T, i: T) -> T {
        if self.c.sd == 0.0 {
            return T::cst(0.0);
        }
        let eta_sd = phn - self.c.u_ref + (dl * self.c.r1 + self.c.r0) * i;
        (eta_sd * (-1.0 / self.c.vt)).exp() * self.c.sd
    }

    fn power<T: Real>(&self, i: T, v: T) -> T {
        i * v * self.c.pw
    }
}

/// The high-fidelity NLP (minimisation form: negated profit plus fade
/// penalty).
#[derive(Debug, Clone)]
pub struct HfNlp<'a> {
    p: &'a CellParameters,
    pub layout: HfLayout,
    pub cfg: OcpConfig,
    alpha: Vec<Vec<f64>>,
    fr_price: Vec<f64>,
    energy_price: Vec<f64>,
    x0: CellState,
    coef: Coef,
    dt: f64,
    jac: Vec<(usize, usize)>,
    hess: Vec<(usize, usize)>,
    init: Vec<f64>,
}

impl<'a> HfNlp<'a> {
    /// Builds the transcription over the window starting from plant state
    /// `x0`; `guess` seeds the rest trajectory used as the initial point.
    pub fn build(
        w: &MarketWindow,
        x0: &CellState,
        guess: &AlgebraicState,
        p: &'a CellParameters,
        cfg: &OcpConfig,
    ) -> Result<Self, OcpError> {
        cfg.validate()?;
        if w.len() != cfg.horizon {
            return Err(OcpError::Config(format!(
                "window has {} hours, horizon is {}",
                w.len(),
                cfg.horizon
            )));
        }
        let s_count = cfg.steps_per_hour;
        let alpha = w.alpha.iter().map(|a| resample(a, s_count)).collect::<Result<Vec<_>, _>>()?;
        let layout = HfLayout {
            horizon: cfg.horizon,
            steps: s_count,
            flexible: cfg.flexible_load,
        };
        let dt = 3600.0 / s_count as f64;
        let mut nlp = Self {
            p,
            layout,
            cfg: cfg.clone(),
            alpha,
            fr_price: w.fr_price.clone(),
            energy_price: w.energy_price.clone(),
            x0: *x0,
            coef: Coef::new(p, dt, x0.delta_f),
            dt,
            jac: Vec::new(),
            hess: Vec::new(),
            init: Vec::new(),
        };
        let n = nlp.layout.num_vars();
        let probe = vec![0.5; n];
        let mut jac = Vec::new();
        nlp.jacobian_entries(&probe, &mut |r, c, _| jac.push((r, c)));
        let mut hess = Vec::new();
        nlp.hessian_entries(&probe, &vec![1.0; nlp.num_cons()], &mut |r, c, _| hess.push((r, c)));
        nlp.jac = jac;
        nlp.hess = hess;
        nlp.init = nlp.rest_point(guess);
        Ok(nlp)
    }

    fn terminal_rows(&self) -> usize {
        if self.cfg.eta_l == self.cfg.eta_u {
            1
        } else {
            2
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// FR signal at OCP resolution.
    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    fn kern(&self) -> Kernels<'_> {
        Kernels { c: &self.coef, p: self.p }
    }

    /// Scaled step variables for a plant state and algebraic point.
    fn step_values(&self, x: &CellState, a: &AlgebraicState, power: f64) -> [f64; HF_STEP_VARS] {
        let p = self.p;
        let c = &self.coef;
        let mut v = [0.0; HF_STEP_VARS];
        v[var::TN] = x.c_avg_n / p.n.c_max;
        v[var::TP] = x.c_avg_p / p.p.c_max;
        v[var::DL] = (x.delta_f - self.x0.delta_f) / DELTA_UNIT;
        v[var::CF] = (x.c_f - self.x0.c_f) / CF_UNIT;
        v[var::TSN] = a.c_s_n / p.n.c_max;
        v[var::TSP] = a.c_s_p / p.p.c_max;
        v[var::PHN] = a.phi_n;
        v[var::PHP] = a.phi_p;
        v[var::ETN] = a.eta_n;
        v[var::ETP] = a.eta_p;
        v[var::I] = a.i_app / c.i1c;
        v[var::JN] = a.j_n / c.jref_n;
        v[var::JSD] = a.j_sd / (c.jref_n * JSD_UNIT);
        v[var::V] = a.v;
        v[var::P] = power;
        v
    }

    /// Packs commitments and a plant trajectory (`N S` consecutive steps at
    /// the OCP resolution) into a point of this NLP.
    pub fn point_from_trajectory(
        &self,
        commits: &[HourlyCommitment],
        traj: &[(CellState, AlgebraicState)],
    ) -> Vec<f64> {
        let ly = &self.layout;
        assert_eq!(commits.len(), ly.horizon);
        assert_eq!(traj.len(), ly.horizon * ly.steps);
        let mut x = vec![0.0; ly.num_vars()];
        for (k, c) in commits.iter().enumerate() {
            x[ly.f(k)] = c.fr_band;
            x[ly.o(k)] = c.purchase;
            for s in 0..ly.steps {
                x[ly.l(k, s)] = c.load_at(s);
                let (st, al) = &traj[k * ly.steps + s];
                let power = c.power_at(s, self.alpha[k][s]);
                let v = self.step_values(st, al, power);
                x[ly.var(k, s, 0)..ly.var(k, s, 0) + HF_STEP_VARS].copy_from_slice(&v);
            }
        }
        x
    }

    /// The plant rolled forward at zero commitments.
    fn rest_point(&self, guess: &AlgebraicState) -> Vec<f64> {
        let ly = self.layout;
        let mut traj = Vec::with_capacity(ly.horizon * ly.steps);
        let mut st = self.x0;
        let mut al = *guess;
        for _ in 0..ly.horizon * ly.steps {
            match cell::step(&st, 0.0, self.dt, self.p, &al) {
                Ok((s1, a1)) => {
                    st = s1;
                    al = a1;
                }
                Err(_) => al = AlgebraicState::open_circuit(&st, self.p),
            }
            traj.push((st, al));
        }
        let commits = vec![HourlyCommitment::rest(); ly.horizon];
        self.point_from_trajectory(&commits, &traj)
    }

    /// Commitments of hour `k`; a flexible load is returned per OCP step.
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

    /// Market profit `Σ π_f F - π_e O`.
    pub fn profit(&self, x: &[f64]) -> f64 {
        let ly = &self.layout;
        (0..ly.horizon)
            .map(|k| self.fr_price[k] * x[ly.f(k)] - self.energy_price[k] * x[ly.o(k)])
            .sum()
    }

    /// Fade over the horizon implied by `x`.
    pub fn horizon_fade(&self, x: &[f64]) -> f64 {
        let ly = &self.layout;
        x[ly.var(ly.horizon - 1, ly.steps - 1, var::CF)] * CF_UNIT
    }

    /// Energy (MWh) at every step of `x`.
    pub fn energies(&self, x: &[f64]) -> Vec<f64> {
        let ly = &self.layout;
        let e_max = self.p.pack.e_max;
        (0..ly.horizon)
            .flat_map(|k| (0..ly.steps).map(move |s| (k, s)))
            .map(|(k, s)| x[ly.var(k, s, var::TN)] * e_max)
            .collect()
    }

    /// Index of step variable `off` at the step preceding `(k, s)`, or
    /// `None` at the start of the horizon.
    fn prev(&self, k: usize, s: usize, off: usize) -> Option<usize> {
        match (k, s) {
            (0, 0) => None,
            (_, 0) => Some(self.layout.var(k - 1, self.layout.steps - 1, off)),
            _ => Some(self.layout.var(k, s - 1, off)),
        }
    }

    fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n, s) = (self.layout.horizon, self.layout.steps);
        (0..n).flat_map(move |k| (0..s).map(move |s| (k, s)))
    }

    fn terminal(&self) -> (usize, usize) {
        let ly = &self.layout;
        let k = ly.horizon - 1;
        let s = ly.steps - 1;
        (ly.var(k, s, var::TN), ly.var(k, s, var::CF))
    }

    /// Emits `(row, col, value)` for every Jacobian entry in a fixed order.
    fn jacobian_entries(&self, x: &[f64], emit: &mut impl FnMut(usize, usize, f64)) {
        let ly = self.layout;
        let c = &self.coef;
        let kn = self.kern();
        for (k, s) in self.steps() {
            let v = |o| ly.var(k, s, o);
            let r = |q| ly.row(k, s, q);
            let xv = |o| x[v(o)];
            // dynamics
            for (q, off, coef_off, a) in [
                (0, var::TN, var::JN, c.a_n),
                (1, var::TP, var::I, c.a_p),
                (2, var::DL, var::JSD, c.a_d),
                (3, var::CF, var::JSD, c.a_c),
            ] {
                emit(r(q), v(off), 1.0);
                if let Some(pj) = self.prev(k, s, off) {
                    emit(r(q), pj, -1.0);
                }
                emit(r(q), v(coef_off), a);
            }
            // surface relations
            emit(r(4), v(var::TSN), 1.0);
            emit(r(4), v(var::TN), -1.0);
            emit(r(4), v(var::JN), c.b_n);
            emit(r(5), v(var::TSP), 1.0);
            emit(r(5), v(var::TP), -1.0);
            emit(r(5), v(var::I), c.b_p);
            // kinetics
            let [ts, et] = Dual::<2>::vars([xv(var::TSN), xv(var::ETN)]);
            let g = kn.bv_n(ts, et).g;
            emit(r(6), v(var::JN), 1.0);
            emit(r(6), v(var::TSN), -g[0]);
            emit(r(6), v(var::ETN), -g[1]);
            let [ts, et] = Dual::<2>::vars([xv(var::TSP), xv(var::ETP)]);
            let g = kn.bv_p(ts, et).g;
            emit(r(7), v(var::I), 1.0);
            emit(r(7), v(var::TSP), -g[0]);
            emit(r(7), v(var::ETP), -g[1]);
            // overpotential definitions
            let [ts, dl, i] = Dual::<3>::vars([xv(var::TSN), xv(var::DL), xv(var::I)]);
            let g = kn.eta_n(ts, dl, i).g;
            emit(r(8), v(var::ETN), 1.0);
            emit(r(8), v(var::PHN), -1.0);
            emit(r(8), v(var::TSN), g[0]);
            emit(r(8), v(var::DL), g[1]);
            emit(r(8), v(var::I), g[2]);
            let g = kn.eta_p(Dual::<1>::var(xv(var::TSP), 0)).g;
            emit(r(9), v(var::ETP), 1.0);
            emit(r(9), v(var::PHP), -1.0);
            emit(r(9), v(var::TSP), g[0]);
            // side reaction
            let [ph, dl, i] = Dual::<3>::vars([xv(var::PHN), xv(var::DL), xv(var::I)]);
            let g = kn.side(ph, dl, i).g;
            emit(r(10), v(var::JSD), 1.0);
            emit(r(10), v(var::PHN), g[0]);
            emit(r(10), v(var::DL), g[1]);
            emit(r(10), v(var::I), g[2]);
            // current balance
            emit(r(11), v(var::JN), 1.0);
            emit(r(11), v(var::JSD), JSD_UNIT);
            emit(r(11), v(var::I), 1.0);
            // voltage
            emit(r(12), v(var::V), 1.0);
            emit(r(12), v(var::PHP), -1.0);
            emit(r(12), v(var::PHN), 1.0);
            // power
            let [i, vv] = Dual::<2>::vars([xv(var::I), xv(var::V)]);
            let g = kn.power(i, vv).g;
            emit(r(13), v(var::P), 1.0);
            emit(r(13), v(var::I), -g[0]);
            emit(r(13), v(var::V), -g[1]);
            // market coupling
            emit(r(14), v(var::P), 1.0);
            emit(r(14), ly.f(k), -self.alpha[k][s]);
            emit(r(14), ly.o(k), -1.0);
            emit(r(14), ly.l(k, s), 1.0);
            // energy window
            emit(r(15), v(var::TN), 1.0);
            emit(r(15), v(var::CF), self.cfg.tau_l * CF_UNIT);
            emit(r(16), v(var::TN), 1.0);
            emit(r(16), v(var::CF), self.cfg.tau_u * CF_UNIT);
        }
        let (tn, cf) = self.terminal();
        let base = ly.num_cons(0);
        emit(base, tn, 1.0);
        emit(base, cf, self.cfg.eta_l * CF_UNIT);
        if self.terminal_rows() == 2 {
            emit(base + 1, tn, 1.0);
            emit(base + 1, cf, self.cfg.eta_u * CF_UNIT);
        }
    }

    /// Emits lower-triangle Hessian entries of `Σ λ_i ∇² g_i`.
    fn hessian_entries(&self, x: &[f64], lambda: &[f64], emit: &mut impl FnMut(usize, usize, f64)) {
        let ly = self.layout;
        let kn = self.kern();
        fn lower<const K: usize>(
            d: &Dual<K>,
            cols: [usize; K],
            w: f64,
            emit: &mut impl FnMut(usize, usize, f64),
        ) {
            for a in 0..K {
                for b in 0..=a {
                    let (r, c) = (cols[a].max(cols[b]), cols[a].min(cols[b]));
                    emit(r, c, w * d.h[a][b]);
                }
            }
        }
        for (k, s) in self.steps() {
            let v = |o| ly.var(k, s, o);
            let lam = |q| lambda[ly.row(k, s, q)];
            let xv = |o| x[v(o)];
            let [ts, et] = Dual::<2>::vars([xv(var::TSN), xv(var::ETN)]);
            lower(&kn.bv_n(ts, et), [v(var::TSN), v(var::ETN)], -lam(6), emit);
            let [ts, et] = Dual::<2>::vars([xv(var::TSP), xv(var::ETP)]);
            lower(&kn.bv_p(ts, et), [v(var::TSP), v(var::ETP)], -lam(7), emit);
            let [ts, dl, i] = Dual::<3>::vars([xv(var::TSN), xv(var::DL), xv(var::I)]);
            lower(&kn.eta_n(ts, dl, i), [v(var::TSN), v(var::DL), v(var::I)], lam(8), emit);
            lower(&kn.eta_p(Dual::<1>::var(xv(var::TSP), 0)), [v(var::TSP)], lam(9), emit);
            let [ph, dl, i] = Dual::<3>::vars([xv(var::PHN), xv(var::DL), xv(var::I)]);
            lower(&kn.side(ph, dl, i), [v(var::PHN), v(var::DL), v(var::I)], lam(10), emit);
            let [i, vv] = Dual::<2>::vars([xv(var::I), xv(var::V)]);
            lower(&kn.power(i, vv), [v(var::I), v(var::V)], -lam(13), emit);
        }
    }
}

impl NlpModel for HfNlp<'_> {
    fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    fn num_cons(&self) -> usize {
        self.layout.num_cons(self.terminal_rows())
    }

    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]) {
        let ly = self.layout;
        let cfg = &self.cfg;
        xl.iter_mut().for_each(|v| *v = -frmpc_solvers::INF);
        xu.iter_mut().for_each(|v| *v = frmpc_solvers::INF);
        for k in 0..ly.horizon {
            xl[ly.f(k)] = 0.0;
            xu[ly.f(k)] = bound(cfg.p_charge_max);
            xl[ly.o(k)] = 0.0;
            xu[ly.o(k)] = bound(cfg.p_charge_max);
            for s in 0..ly.steps {
                xl[ly.l(k, s)] = 0.0;
                xu[ly.l(k, s)] = bound(cfg.p_discharge_max);
                for off in [var::TN, var::TP, var::TSN, var::TSP] {
                    xl[ly.var(k, s, off)] = 0.0;
                    xu[ly.var(k, s, off)] = 1.0;
                }
                for off in [var::ETN, var::ETP] {
                    xl[ly.var(k, s, off)] = -ETA_MAX;
                    xu[ly.var(k, s, off)] = ETA_MAX;
                }
                xl[ly.var(k, s, var::V)] = bound(cfg.v_min);
                xu[ly.var(k, s, var::V)] = bound(cfg.v_max);
                xl[ly.var(k, s, var::P)] = -bound(cfg.p_discharge_max);
                xu[ly.var(k, s, var::P)] = bound(cfg.p_charge_max);
            }
        }
    }

    fn con_bounds(&self, gl: &mut [f64], gu: &mut [f64]) {
        let ly = self.layout;
        let p = self.p;
        let inf = frmpc_solvers::INF;
        gl.iter_mut().for_each(|v| *v = 0.0);
        gu.iter_mut().for_each(|v| *v = 0.0);
        // initial state enters the first dynamics rows as a constant
        let x0 = &self.x0;
        for (q, v) in [(0, x0.c_avg_n / p.n.c_max), (1, x0.c_avg_p / p.p.c_max), (2, 0.0), (3, 0.0)] {
            gl[ly.row(0, 0, q)] = v;
            gu[ly.row(0, 0, q)] = v;
        }
        let cap = 1.0 - x0.c_f;
        for (k, s) in self.steps() {
            gl[ly.row(k, s, 15)] = self.cfg.tau_l * cap;
            gu[ly.row(k, s, 15)] = inf;
            gl[ly.row(k, s, 16)] = -inf;
            gu[ly.row(k, s, 16)] = self.cfg.tau_u * cap;
        }
        let base = ly.num_cons(0);
        if self.terminal_rows() == 1 {
            gl[base] = self.cfg.eta_l * cap;
            gu[base] = self.cfg.eta_l * cap;
        } else {
            gl[base] = self.cfg.eta_l * cap;
            gu[base] = inf;
            gl[base + 1] = -inf;
            gu[base + 1] = self.cfg.eta_u * cap;
        }
    }

    fn initial_point(&self, x: &mut [f64]) {
        x.copy_from_slice(&self.init);
    }

    fn objective(&self, x: &[f64]) -> f64 {
        -self.profit(x) + self.cfg.fade_penalty * self.horizon_fade(x)
    }

    fn objective_gradient(&self, _x: &[f64], grad: &mut [f64]) {
        let ly = self.layout;
        grad.iter_mut().for_each(|g| *g = 0.0);
        for k in 0..ly.horizon {
            grad[ly.f(k)] = -self.fr_price[k];
            grad[ly.o(k)] = self.energy_price[k];
        }
        grad[self.terminal().1] = self.cfg.fade_penalty * CF_UNIT;
    }

    fn constraints(&self, x: &[f64], g: &mut [f64]) {
        let ly = self.layout;
        let c = &self.coef;
        let kn = self.kern();
        for (k, s) in self.steps() {
            let xv = |o| x[ly.var(k, s, o)];
            let pv = |o| self.prev(k, s, o).map_or(0.0, |j| x[j]);
            let r = |q| ly.row(k, s, q);
            g[r(0)] = xv(var::TN) - pv(var::TN) + c.a_n * xv(var::JN);
            g[r(1)] = xv(var::TP) - pv(var::TP) + c.a_p * xv(var::I);
            g[r(2)] = xv(var::DL) - pv(var::DL) + c.a_d * xv(var::JSD);
            g[r(3)] = xv(var::CF) - pv(var::CF) + c.a_c * xv(var::JSD);
            g[r(4)] = xv(var::TSN) - xv(var::TN) + c.b_n * xv(var::JN);
            g[r(5)] = xv(var::TSP) - xv(var::TP) + c.b_p * xv(var::I);
            g[r(6)] = xv(var::JN) - kn.bv_n(xv(var::TSN), xv(var::ETN));
            g[r(7)] = xv(var::I) - kn.bv_p(xv(var::TSP), xv(var::ETP));
            g[r(8)] = xv(var::ETN) - xv(var::PHN) + kn.eta_n(xv(var::TSN), xv(var::DL), xv(var::I));
            g[r(9)] = xv(var::ETP) - xv(var::PHP) + kn.eta_p(xv(var::TSP));
            g[r(10)] = xv(var::JSD) + kn.side(xv(var::PHN), xv(var::DL), xv(var::I));
            g[r(11)] = xv(var::JN) + JSD_UNIT * xv(var::JSD) + xv(var::I);
            g[r(12)] = xv(var::V) - xv(var::PHP) + xv(var::PHN);
            g[r(13)] = xv(var::P) - kn.power(xv(var::I), xv(var::V));
            g[r(14)] = xv(var::P) - self.alpha[k][s] * x[ly.f(k)] - x[ly.o(k)] + x[ly.l(k, s)];
            g[r(15)] = xv(var::TN) + self.cfg.tau_l * CF_UNIT * xv(var::CF);
            g[r(16)] = xv(var::TN) + self.cfg.tau_u * CF_UNIT * xv(var::CF);
        }
        let (tn, cf) = self.terminal();
        let base = ly.num_cons(0);
        g[base] = x[tn] + self.cfg.eta_l * CF_UNIT * x[cf];
        if self.terminal_rows() == 2 {
            g[base + 1] = x[tn] + self.cfg.eta_u * CF_UNIT * x[cf];
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.jac.clone()
    }

    fn jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
        let mut k = 0;
        self.jacobian_entries(x, &mut |_, _, v| {
            vals[k] = v;
            k += 1;
        });
    }

    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        self.hess.clone()
    }

    fn hessian_values(&self, x: &[f64], _obj_factor: f64, lambda: &[f64], vals: &mut [f64]) {
        let mut k = 0;
        self.hessian_entries(x, lambda, &mut |_, _, v| {
            vals[k] = v;
            k += 1;
        });
    }
}
