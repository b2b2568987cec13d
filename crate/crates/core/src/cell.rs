//! Reduced single-particle cell model with an SEI side reaction.
//!
//! Each electrode is one spherical particle whose concentration profile is
//! approximated by a parabola, leaving the particle average as the only
//! differential state. Sign convention: positive applied current charges the
//! cell, which drives `J_n < 0` (lithium insertion into the negative
//! particle) and `J_p > 0`.

use crate::ad::{Dual, Real};
use crate::error::CellError;
use crate::params::{CellParameters, Electrode};

/// Faraday constant, C/mol.
pub const FARADAY: f64 = 96487.0;
/// Ideal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314;

pub const STEP_TOL: f64 = 1e-10;
pub const STEP_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    /// mol/m³
    pub c_avg_n: f64,
    /// mol/m³
    pub c_avg_p: f64,
    /// SEI film thickness, m.
    pub delta_f: f64,
    /// Cumulative capacity fade, fraction.
    pub c_f: f64,
}

impl CellState {
    /// Fresh cell with the negative electrode at stoichiometry `theta_n` and
    /// the positive electrode at the lithium-conserving counterpart.
    pub fn fresh(p: &CellParameters, theta_n: f64) -> Self {
        Self {
            c_avg_n: theta_n * p.n.c_max,
            c_avg_p: p.theta_p_for(theta_n) * p.p.c_max,
            delta_f: 0.0,
            c_f: 0.0,
        }
    }

    pub fn half_charged(p: &CellParameters) -> Self {
        Self::fresh(p, 0.5)
    }

    pub fn theta_n(&self, p: &CellParameters) -> f64 {
        self.c_avg_n / p.n.c_max
    }

    pub fn theta_p(&self, p: &CellParameters) -> f64 {
        self.c_avg_p / p.p.c_max
    }

    /// Stored energy, MWh.
    pub fn energy(&self, p: &CellParameters) -> f64 {
        self.c_avg_n / p.n.c_max * p.pack.e_max
    }

    /// Total cyclable lithium `Σ c_avg_j S_j R_j / 3`, mol.
    pub fn lithium(&self, p: &CellParameters) -> f64 {
        self.c_avg_n * p.n.area * p.n.radius / 3.0 + self.c_avg_p * p.p.area * p.p.radius / 3.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgebraicState {
    pub c_s_n: f64,
    pub c_s_p: f64,
    pub phi_n: f64,
    pub phi_p: f64,
    pub eta_n: f64,
    pub eta_p: f64,
    pub eta_sd: f64,
    pub j_n: f64,
    pub j_p: f64,
    pub j_sd: f64,
    pub i_app: f64,
    pub v: f64,
    pub r_f: f64,
}

impl AlgebraicState {
    /// Open-circuit point at state `x` with zero current. The side reaction
    /// is evaluated but not balanced, so this is only a starting guess unless
    /// the side reaction is disabled.
    pub fn open_circuit(x: &CellState, p: &CellParameters) -> Self {
        let u_n = p.n.ocv.eval(x.theta_n(p));
        let u_p = p.p.ocv.eval(x.theta_p(p));
        let r_f = film_resistance(x.delta_f, p);
        let eta_sd = u_n - p.side.u_ref;
        Self {
            c_s_n: x.c_avg_n,
            c_s_p: x.c_avg_p,
            phi_n: u_n,
            phi_p: u_p,
            eta_n: 0.0,
            eta_p: 0.0,
            eta_sd,
            j_n: 0.0,
            j_p: 0.0,
            j_sd: side_current(eta_sd, p),
            i_app: 0.0,
            v: u_p - u_n,
            r_f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outputs {
    /// MWh
    pub energy: f64,
    /// V
    pub voltage: f64,
    /// Fade rate, 1/s (nonnegative).
    pub fade_rate: f64,
}

/// `i0 = F k (c_max - c_s)^½ c_s^½ c_e^½`
pub fn exchange_current_density(c_s: f64, c_max: f64, c_e: f64, k: f64) -> Result<f64, CellError> {
    if !(0.0..=c_max).contains(&c_s) {
        return Err(CellError::Domain {
            what: "surface",
            value: c_s,
            max: c_max,
        });
    }
    Ok(FARADAY * k * (c_max - c_s).sqrt() * c_s.sqrt() * c_e.sqrt())
}

/// Exchange current on the scaled surface stoichiometry, without domain
/// checks.
pub fn exchange_current_theta<T: Real>(theta_s: T, e: &Electrode, c_e: f64) -> T {
    (theta_s * (-theta_s + 1.0)).sqrt() * (FARADAY * e.rate_constant * e.c_max * c_e.sqrt())
}

/// `J = 2 i0 sinh(F η / (2 R T))`
pub fn bv_current(i0: f64, eta: f64, temperature: f64) -> f64 {
    2.0 * i0 * (0.5 * FARADAY * eta / (GAS_CONSTANT * temperature)).sinh()
}

/// Inverse Butler–Volmer relation `η = 2 (R T / F) asinh(J / (2 i0))`.
pub fn bv_overpotential<T: Real>(j: T, i0: T, thermal_voltage: f64) -> T {
    (j / (i0 * 2.0)).asinh() * (2.0 * thermal_voltage)
}

/// `R_f = R_SEI + δ / κ`
pub fn film_resistance(delta_f: f64, p: &CellParameters) -> f64 {
    p.side.r_sei + delta_f / p.side.conductivity
}

/// `J_sd = -i0_sd exp(-F η_sd / (R T))`
pub fn side_current<T: Real>(eta_sd: T, p: &CellParameters) -> T {
    if p.side.i0 == 0.0 {
        return T::cst(0.0);
    }
    -(eta_sd * (-1.0 / p.thermal_voltage())).exp() * p.side.i0
}

/// Side-reaction current density for a given negative potential, applied
/// current and film thickness.
pub fn side_reaction_current(phi_n: f64, i_app: f64, delta_f: f64, p: &CellParameters) -> f64 {
    let r_f = film_resistance(delta_f, p);
    let eta_sd = phi_n - p.side.u_ref + r_f * i_app / p.n.area;
    side_current(eta_sd, p)
}

pub const RESIDUAL_LEN: usize = 13;

/// Stacked algebraic residuals in scaled units: concentrations relative to
/// `c_max`, potentials in volts, current densities relative to the 1C
/// density of each electrode, resistance relative to `R_SEI`, power in MW.
pub fn algebraic_residual(
    x: &CellState,
    a: &AlgebraicState,
    power: f64,
    p: &CellParameters,
) -> Result<[f64; RESIDUAL_LEN], CellError> {
    let i0_n = exchange_current_density(a.c_s_n, p.n.c_max, p.c_e, p.n.rate_constant)?;
    let i0_p = exchange_current_density(a.c_s_p, p.p.c_max, p.c_e, p.p.rate_constant)?;
    let i1c = p.one_c_current();
    let jref_n = i1c / p.n.area;
    let jref_p = i1c / p.p.area;
    let u_n = p.n.ocv.eval(a.c_s_n / p.n.c_max);
    let u_p = p.p.ocv.eval(a.c_s_p / p.p.c_max);
    let film_drop = a.r_f * a.i_app / p.n.area;
    let t = p.temperature;
    Ok([
        (a.c_s_n - (x.c_avg_n - a.j_n * p.n.radius / (5.0 * p.n.diffusivity * FARADAY))) / p.n.c_max,
        (a.c_s_p - (x.c_avg_p - a.j_p * p.p.radius / (5.0 * p.p.diffusivity * FARADAY))) / p.p.c_max,
        a.eta_n - (a.phi_n - u_n + film_drop),
        a.eta_p - (a.phi_p - u_p),
        a.eta_sd - (a.phi_n - p.side.u_ref + film_drop),
        (a.r_f - film_resistance(x.delta_f, p)) / p.side.r_sei,
        (a.j_n - bv_current(i0_n, a.eta_n, t)) / jref_n,
        (a.j_p - bv_current(i0_p, a.eta_p, t)) / jref_p,
        (a.j_sd - side_current(a.eta_sd, p)) / jref_n,
        (a.j_p - a.i_app / p.p.area) / jref_p,
        (a.j_n + a.j_sd + a.i_app / p.n.area) / jref_n,
        a.v - (a.phi_p - a.phi_n),
        power - a.i_app * a.v / 1e6,
    ])
}

pub fn outputs(x: &CellState, a: &AlgebraicState, p: &CellParameters) -> Outputs {
    Outputs {
        energy: x.energy(p),
        voltage: a.phi_p - a.phi_n,
        fade_rate: a.j_sd.abs() * p.n.area / p.pack.q_max,
    }
}

/// Everything that follows explicitly from `(I_app, J_n)` within one step.
#[derive(Debug, Clone, Copy)]
struct Implicit<T> {
    c_n: T,
    c_p: T,
    c_sn: T,
    c_sp: T,
    eta_n: T,
    eta_p: T,
    eta_sd: T,
    j_sd: T,
    j_p: T,
    delta: T,
    r_f: T,
    phi_n: T,
    phi_p: T,
}

struct StepCtx<'a> {
    x: &'a CellState,
    power: f64,
    dt: f64,
    p: &'a CellParameters,
    i1c: f64,
    jref_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DomainSide {
    Low,
    High,
}

impl StepCtx<'_> {
    /// Evaluates the two reduced residuals at scaled current `i = I/I_1C`
    /// and scaled density `j = J_n S_n / I_1C`.
    #[allow(clippy::type_complexity)]
    fn eval<T: Real>(&self, i: T, j: T) -> Result<(T, T, Implicit<T>), (DomainSide, CellError)> {
        let p = self.p;
        let x = self.x;
        let i_app = i * self.i1c;
        let j_n = j * self.jref_n;
        let j_p = i_app / p.p.area;
        let c_n = j_n * (-3.0 * self.dt / (p.n.radius * FARADAY)) + x.c_avg_n;
        let c_p = j_p * (-3.0 * self.dt / (p.p.radius * FARADAY)) + x.c_avg_p;
        let c_sn = c_n - j_n * (p.n.radius / (5.0 * p.n.diffusivity * FARADAY));
        let c_sp = c_p - j_p * (p.p.radius / (5.0 * p.p.diffusivity * FARADAY));
        for (c, e, what) in [(c_sn, &p.n, "negative surface"), (c_sp, &p.p, "positive surface")] {
            let v = c.value();
            if !(v > 0.0 && v < e.c_max) {
                let side = if v <= 0.0 { DomainSide::Low } else { DomainSide::High };
                return Err((
                    side,
                    CellError::Domain {
                        what,
                        value: v,
                        max: e.c_max,
                    },
                ));
            }
        }
        let th_n = c_sn / p.n.c_max;
        let th_p = c_sp / p.p.c_max;
        let vt = p.thermal_voltage();
        let eta_n = bv_overpotential(j_n, exchange_current_theta(th_n, &p.n, p.c_e), vt);
        let eta_p = bv_overpotential(j_p, exchange_current_theta(th_p, &p.p, p.c_e), vt);
        let u_n = p.n.ocv.eval_real(th_n);
        let u_p = p.p.ocv.eval_real(th_p);
        let eta_sd = u_n + eta_n - p.side.u_ref;
        let j_sd = side_current(eta_sd, p);
        let delta = j_sd * (-p.side.molar_mass * self.dt / (p.side.density * FARADAY)) + x.delta_f;
        let r_f = delta / p.side.conductivity + p.side.r_sei;
        let phi_n = u_n + eta_n - r_f * i_app / p.n.area;
        let phi_p = u_p + eta_p;
        let v = phi_p - phi_n;
        let r1 = (j_n + j_sd + i_app / p.n.area) / self.jref_n;
        let r2 = i_app * v / 1e6 - self.power;
        Ok((
            r1,
            r2,
            Implicit {
                c_n,
                c_p,
                c_sn,
                c_sp,
                eta_n,
                eta_p,
                eta_sd,
                j_sd,
                j_p,
                delta,
                r_f,
                phi_n,
                phi_p,
            },
        ))
    }

    fn newton(&self, i0: f64, j0: f64) -> Option<(f64, f64)> {
        let (mut i, mut j) = (i0, j0);
        let mut res = match self.eval(i, j) {
            Ok((r1, r2, _)) => r1.abs().max(r2.abs()),
            Err(_) => return None,
        };
        for _ in 0..STEP_MAX_ITER {
            if res <= STEP_TOL {
                return Some((i, j));
            }
            let [di, dj] = Dual::<2>::vars([i, j]);
            let (r1, r2, _) = self.eval(di, dj).ok()?;
            let (a, b, c, d) = (r1.g[0], r1.g[1], r2.g[0], r2.g[1]);
            let det = a * d - b * c;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let si = -(d * r1.v - b * r2.v) / det;
            let sj = -(-c * r1.v + a * r2.v) / det;
            let mut t = 1.0;
            loop {
                let (ti, tj) = (i + t * si, j + t * sj);
                if let Ok((q1, q2, _)) = self.eval(ti, tj) {
                    let r = q1.abs().max(q2.abs());
                    if r < (1.0 - 1e-4 * t) * res || r <= STEP_TOL {
                        i = ti;
                        j = tj;
                        res = r;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-10 {
                    return None;
                }
            }
        }
        (res <= STEP_TOL).then_some((i, j))
    }

    /// Solves the current balance for `j` at fixed `i` by safeguarded
    /// bisection. The balance residual is increasing in `j`.
    fn balance_j(&self, i: f64) -> Option<(f64, f64)> {
        let sign = |j: f64| -> Option<(f64, f64)> {
            match self.eval(i, j) {
                Ok((r1, r2, _)) => Some((r1, r2)),
                Err((DomainSide::High, _)) => Some((-1.0, f64::NAN)),
                Err((DomainSide::Low, _)) => Some((1.0, f64::NAN)),
            }
        };
        let mut lo = -i - 1.0;
        let mut hi = -i + 1.0;
        let mut k = 0;
        while sign(lo)?.0 > 0.0 {
            lo -= 2.0f64.powi(k);
            k += 1;
            if k > 60 {
                return None;
            }
        }
        k = 0;
        while sign(hi)?.0 < 0.0 {
            hi += 2.0f64.powi(k);
            k += 1;
            if k > 60 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (r1, r2) = sign(mid)?;
            if r1.abs() <= 0.1 * STEP_TOL && r2.is_finite() {
                return Some((mid, r2));
            }
            if r1 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
                return r2.is_finite().then_some((mid, r2));
            }
        }
        None
    }

    /// Bisection on the applied current for the power relation.
    fn bisect(&self, i_guess: f64) -> Option<(f64, f64)> {
        let target = self.power;
        if target == 0.0 {
            return self.balance_j(0.0).map(|(j, _)| (0.0, j));
        }
        let dir = target.signum();
        // g(i) = I V - P changes sign between 0 and some i with the sign of P
        let g = |i: f64| self.balance_j(i).map(|(j, r2)| (r2, j));
        let (g0, _) = g(0.0)?;
        if g0 * dir > 0.0 {
            return None;
        }
        let mut a = 0.0;
        let mut b = if i_guess * dir > 0.0 { i_guess } else { dir * target.abs() * 1e6 / 3.0 / self.i1c };
        let mut k = 0;
        loop {
            match g(b) {
                Some((gb, _)) if gb * dir >= 0.0 => break,
                Some(_) => {
                    a = b;
                    b *= 2.0;
                }
                None => b = 0.5 * (a + b),
            }
            k += 1;
            if k > 80 {
                return None;
            }
        }
        let mut best = None;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let (gm, jm) = match g(mid) {
                Some(v) => v,
                None => {
                    b = mid;
                    continue;
                }
            };
            best = Some((mid, jm, gm));
            if gm.abs() <= STEP_TOL {
                break;
            }
            if gm * dir < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a).abs() <= f64::EPSILON * (1.0 + mid.abs()) {
                break;
            }
        }
        let (i, j, gm) = best?;
        (gm.abs() <= STEP_TOL).then_some((i, j))
    }
}

/// One fully implicit backward-Euler step of length `dt` seconds at
/// constant power `power` MW (positive charges the cell).
pub fn step(
    x: &CellState,
    power: f64,
    dt: f64,
    p: &CellParameters,
    guess: &AlgebraicState,
) -> Result<(CellState, AlgebraicState), CellError> {
    assert!(dt > 0.0, "step length must be positive");
    let i1c = p.one_c_current();
    let ctx = StepCtx {
        x,
        power,
        dt,
        p,
        i1c,
        jref_n: i1c / p.n.area,
    };
    let mut i0 = guess.i_app / i1c;
    let mut j0 = guess.j_n / ctx.jref_n;
    if i0 == 0.0 && power != 0.0 {
        let v = if guess.v > 0.0 {
            guess.v
        } else {
            p.p.ocv.eval(x.theta_p(p)) - p.n.ocv.eval(x.theta_n(p))
        };
        i0 = power * 1e6 / v / i1c;
        j0 = -i0;
    }
    let solved = ctx.newton(i0, j0).or_else(|| ctx.newton(i0, -i0)).or_else(|| ctx.bisect(i0));
    let (i, j) = match solved {
        Some(s) => s,
        None => {
            return Err(match ctx.eval(i0, j0) {
                Err((_, e)) => e,
                Ok((r1, r2, _)) => CellError::NonConvergence {
                    iterations: STEP_MAX_ITER,
                    residual: r1.abs().max(r2.abs()),
                },
            });
        }
    };
    let (_, _, d) = ctx.eval(i, j).map_err(|(_, e)| e)?;
    let i_app = i * i1c;
    let j_n = j * ctx.jref_n;
    let new = CellState {
        c_avg_n: d.c_n,
        c_avg_p: d.c_p,
        delta_f: d.delta,
        c_f: x.c_f + d.j_sd.abs() * p.n.area * dt / p.pack.q_max,
    };
    let alg = AlgebraicState {
        c_s_n: d.c_sn,
        c_s_p: d.c_sp,
        phi_n: d.phi_n,
        phi_p: d.phi_p,
        eta_n: d.eta_n,
        eta_p: d.eta_p,
        eta_sd: d.eta_sd,
        j_n,
        j_p: d.j_p,
        j_sd: d.j_sd,
        i_app,
        v: d.phi_p - d.phi_n,
        r_f: d.r_f,
    };
    Ok((new, alg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exchange_current_vanishes_at_ends() {
        assert_eq!(exchange_current_density(0.0, 100.0, 1000.0, 1e-10).unwrap(), 0.0);
        assert_eq!(exchange_current_density(100.0, 100.0, 1000.0, 1e-10).unwrap(), 0.0);
        assert!(exchange_current_density(101.0, 100.0, 1000.0, 1e-10).is_err());
        assert!(exchange_current_density(-1.0, 100.0, 1000.0, 1e-10).is_err());
    }

    #[test]
    fn rest_step_without_side_reaction_is_stationary() {
        let p = CellParameters::default_lfp().without_side_reaction();
        let x = CellState::half_charged(&p);
        let g = AlgebraicState::open_circuit(&x, &p);
        let (x1, a1) = step(&x, 0.0, 2.0, &p, &g).unwrap();
        assert_eq!(x1.c_avg_n, x.c_avg_n);
        assert_eq!(x1.c_avg_p, x.c_avg_p);
        assert_eq!(x1.delta_f, 0.0);
        assert_eq!(x1.c_f, 0.0);
        assert_eq!(a1.i_app, 0.0);
    }

    #[test]
    fn charge_step_satisfies_full_residual() {
        let p = CellParameters::default_lfp();
        let x = CellState::half_charged(&p);
        let g = AlgebraicState::open_circuit(&x, &p);
        let (x1, a1) = step(&x, 3.0, 2.0, &p, &g).unwrap();
        let r = algebraic_residual(&x1, &a1, 3.0, &p).unwrap();
        assert!(r.iter().all(|v| v.abs() <= 1e-9), "{r:?}");
        assert!(a1.i_app > 0.0 && a1.j_n < 0.0 && a1.j_sd < 0.0);
        assert!(x1.c_avg_n > x.c_avg_n);
    }
}
