//! Primal-dual interior point method for sparse nonlinear programs.
//!
//! Inequality rows receive slack variables, bounds are handled with a
//! logarithmic barrier and steps are globalised with an l1 merit line search.
//! The Newton system is factorised with a pivoting sparse LU. Because LU does
//! not reveal inertia, the Hessian regularisation is driven by a curvature
//! test on the computed step.

use std::time::{Duration, Instant};

use log::{debug, trace};

use crate::lu;
use crate::ordering::{minimum_degree, symmetric_adjacency};
use crate::report::{KktResiduals, SolveReport, SolveStatus};
use crate::sparse::{dot, norm_1, norm_inf, CscPattern};
use crate::INF;

/// A smooth nonlinear program
///
/// ```text
/// min f(x)  s.t.  g_l <= g(x) <= g_u,  x_l <= x <= x_u
/// ```
///
/// Rows with `g_l == g_u` are treated as equalities. Bounds at or beyond
/// `±1e19` are treated as absent.
pub trait NlpModel {
    fn num_vars(&self) -> usize;
    fn num_cons(&self) -> usize;
    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]);
    fn con_bounds(&self, gl: &mut [f64], gu: &mut [f64]);
    fn initial_point(&self, x: &mut [f64]);
    fn objective(&self, x: &[f64]) -> f64;
    fn objective_gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], g: &mut [f64]);
    fn jacobian_structure(&self) -> Vec<(usize, usize)>;
    fn jacobian_values(&self, x: &[f64], vals: &mut [f64]);
    /// Lower triangle (`row >= col`) of the Lagrangian Hessian.
    fn hessian_structure(&self) -> Vec<(usize, usize)>;
    /// Values of `obj_factor * ∇²f + Σ λ_i ∇²g_i` on `hessian_structure`.
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], vals: &mut [f64]);
    /// True when f and g are affine. Skips the curvature test.
    fn is_linear(&self) -> bool {
        false
    }
    /// Extra user scaling of the objective, applied on top of the automatic
    /// gradient-based factor.
    fn objective_scaling(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct IpmOptions {
    pub tol: f64,
    pub acceptable_tol: f64,
    pub acceptable_iter: usize,
    pub max_iter: usize,
    pub mu_init: f64,
    /// Smallest barrier parameter; defaults to `tol / 10`.
    pub mu_min: Option<f64>,
    pub bound_push: f64,
    pub bound_frac: f64,
    pub bound_relax: f64,
    pub pivot_tol: f64,
    pub max_time: Option<Duration>,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            acceptable_tol: 1e-6,
            acceptable_iter: 15,
            max_iter: 3000,
            mu_init: 0.1,
            mu_min: None,
            bound_push: 1e-2,
            bound_frac: 1e-2,
            bound_relax: 1e-10,
            pivot_tol: 0.0,
            max_time: None,
        }
    }
}

/// Starting point for a solve. `y` uses the sign convention of
/// [`SolveReport::y`].
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
}

const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const S_MAX: f64 = 100.0;
const KAPPA_SIGMA: f64 = 1e10;
const ETA_ARMIJO: f64 = 1e-4;
const RHO_PENALTY: f64 = 0.1;
const KAPPA_CURV: f64 = 1e-10;
const MAX_LS_FAILS: usize = 5;
const BIG_BOUND: f64 = 1e19;
/// Static shifts on the primal and constraint diagonals of the factorised
/// KKT matrix; iterative refinement removes them again.
const W_STATIC: f64 = 1e-10;
const C_STATIC: f64 = 1e-10;
/// Relative residual the shifted factorisation must reach after refinement;
/// otherwise the solve switches to threshold pivoting without shifts.
const SHIFTED_SOLVE_TOL: f64 = 1e-10;
const ROBUST_PIVOT_TOL: f64 = 1e-2;

/// Scaled problem with slack variables `v = (x, s)`.
struct Internal<'a, M: NlpModel + ?Sized> {
    model: &'a M,
    n: usize,
    m: usize,
    nv: usize,
    sf: f64,
    dc: Vec<f64>,
    /// Slack index for each row (inequality rows only).
    slack: Vec<Option<usize>>,
    /// Row owning each slack.
    slack_row: Vec<usize>,
    /// Right-hand side of equality rows, scaled.
    eq_rhs: Vec<f64>,
    jac: Vec<(usize, usize)>,
    hess: Vec<(usize, usize)>,
    linear: bool,
    xbuf: std::cell::RefCell<Vec<f64>>,
}

impl<M: NlpModel + ?Sized> Internal<'_, M> {
    fn f(&self, v: &[f64]) -> f64 {
        self.sf * self.model.objective(&v[..self.n])
    }

    fn grad(&self, v: &[f64], g: &mut [f64]) {
        self.model.objective_gradient(&v[..self.n], &mut g[..self.n]);
        for gi in g[..self.n].iter_mut() {
            *gi *= self.sf;
        }
        g[self.n..].iter_mut().for_each(|x| *x = 0.0);
    }

    fn cons(&self, v: &[f64], c: &mut [f64]) {
        let mut buf = self.xbuf.borrow_mut();
        self.model.constraints(&v[..self.n], &mut buf);
        for i in 0..self.m {
            let gi = self.dc[i] * buf[i];
            c[i] = match self.slack[i] {
                Some(s) => gi - v[self.n + s],
                None => gi - self.eq_rhs[i],
            };
        }
    }

    fn jac_values(&self, v: &[f64], vals: &mut [f64]) {
        self.model.jacobian_values(&v[..self.n], vals);
        for (k, &(i, _)) in self.jac.iter().enumerate() {
            vals[k] *= self.dc[i];
        }
    }

    /// `out += J^T y`
    fn jac_t(&self, jv: &[f64], y: &[f64], out: &mut [f64]) {
        for (k, &(i, j)) in self.jac.iter().enumerate() {
            out[j] += jv[k] * y[i];
        }
        for (s, &i) in self.slack_row.iter().enumerate() {
            out[self.n + s] -= y[i];
        }
    }

    fn hess_values(&self, v: &[f64], y: &[f64], vals: &mut [f64]) {
        if self.hess.is_empty() {
            return;
        }
        let lam: Vec<f64> = y.iter().zip(&self.dc).map(|(a, b)| a * b).collect();
        self.model.hessian_values(&v[..self.n], self.sf, &lam, vals);
    }

    fn hess_quad(&self, hv: &[f64], d: &[f64]) -> f64 {
        let mut q = 0.0;
        for (k, &(r, c)) in self.hess.iter().enumerate() {
            if r == c {
                q += hv[k] * d[r] * d[r];
            } else {
                q += 2.0 * hv[k] * d[r] * d[c];
            }
        }
        q
    }
}

struct Bounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
    has_lo: Vec<bool>,
    has_hi: Vec<bool>,
}

impl Bounds {
    fn count(&self) -> usize {
        self.has_lo.iter().filter(|&&b| b).count() + self.has_hi.iter().filter(|&&b| b).count()
    }

    fn barrier(&self, v: &[f64], mu: f64) -> f64 {
        let mut b = 0.0;
        for k in 0..v.len() {
            if self.has_lo[k] {
                let d = v[k] - self.lo[k];
                if d <= 0.0 {
                    return f64::INFINITY;
                }
                b -= mu * d.ln();
            }
            if self.has_hi[k] {
                let d = self.hi[k] - v[k];
                if d <= 0.0 {
                    return f64::INFINITY;
                }
                b -= mu * d.ln();
            }
        }
        b
    }

    fn max_step(&self, v: &[f64], dv: &[f64], tau: f64) -> f64 {
        let mut a: f64 = 1.0;
        for k in 0..v.len() {
            if self.has_lo[k] && dv[k] < 0.0 {
                a = a.min(-tau * (v[k] - self.lo[k]) / dv[k]);
            }
            if self.has_hi[k] && dv[k] > 0.0 {
                a = a.min(tau * (self.hi[k] - v[k]) / dv[k]);
            }
        }
        a
    }
}

fn max_step_z(z: &[f64], dz: &[f64], tau: f64) -> f64 {
    let mut a: f64 = 1.0;
    for k in 0..z.len() {
        if dz[k] < 0.0 {
            a = a.min(-tau * z[k] / dz[k]);
        }
    }
    a
}

/// Fixed KKT pattern with slots for every contribution.
struct Kkt {
    pat: CscPattern,
    dim: usize,
    nv: usize,
    order: Vec<usize>,
    diag0: usize,
    hess0: usize,
    jac0: usize,
    slack0: usize,
    hess_offdiag: Vec<bool>,
}

impl Kkt {
    fn new<M: NlpModel + ?Sized>(p: &Internal<M>) -> Self {
        let nv = p.nv;
        let dim = nv + p.m;
        let mut coords = Vec::with_capacity(dim + 2 * p.hess.len() + 2 * p.jac.len());
        let diag0 = 0;
        for i in 0..dim {
            coords.push((i, i));
        }
        let hess0 = coords.len();
        let mut hess_offdiag = Vec::with_capacity(p.hess.len());
        for &(r, c) in &p.hess {
            coords.push((r, c));
            coords.push((c, r));
            hess_offdiag.push(r != c);
        }
        let jac0 = coords.len();
        for &(i, j) in &p.jac {
            coords.push((nv + i, j));
            coords.push((j, nv + i));
        }
        let slack0 = coords.len();
        for (s, &i) in p.slack_row.iter().enumerate() {
            coords.push((nv + i, p.n + s));
            coords.push((p.n + s, nv + i));
        }
        let pat = CscPattern::new(dim, dim, &coords);
        let adj = symmetric_adjacency(dim, &pat.matrix.colptr, &pat.matrix.rowind);
        let order = minimum_degree(&adj);
        Self {
            pat,
            dim,
            nv,
            order,
            diag0,
            hess0,
            jac0,
            slack0,
            hess_offdiag,
        }
    }

    fn assemble(&mut self, sigma: &[f64], hv: &[f64], jv: &[f64], dw: f64, dc: f64) {
        self.pat.clear();
        for i in 0..self.nv {
            self.pat.add(self.diag0 + i, sigma[i] + dw);
        }
        for i in self.nv..self.dim {
            self.pat.add(self.diag0 + i, -dc);
        }
        for (k, &v) in hv.iter().enumerate() {
            self.pat.add(self.hess0 + 2 * k, v);
            if self.hess_offdiag[k] {
                self.pat.add(self.hess0 + 2 * k + 1, v);
            }
        }
        for (k, &v) in jv.iter().enumerate() {
            self.pat.add(self.jac0 + 2 * k, v);
            self.pat.add(self.jac0 + 2 * k + 1, v);
        }
        let ns = (self.pat.slot.len() - self.slack0) / 2;
        for s in 0..ns {
            self.pat.add(self.slack0 + 2 * s, -1.0);
            self.pat.add(self.slack0 + 2 * s + 1, -1.0);
        }
    }

    /// Solves with a few rounds of iterative refinement against the matrix
    /// without the static `shift`, which therefore only perturbs the
    /// factors. Returns the solution, its relative residual and the 1-norm
    /// of the residual in the constraint rows.
    fn solve(&self, f: &lu::LuFactors, rhs: &[f64], shift: (f64, f64)) -> (Vec<f64>, f64, f64) {
        let mut x = rhs.to_vec();
        f.solve(&mut x);
        let scale = 1.0 + norm_inf(rhs);
        let mut prev = x.clone();
        let mut rel = f64::INFINITY;
        let mut cons = f64::INFINITY;
        let mut prev_cons = f64::INFINITY;
        for round in 0..6 {
            let mut ax = vec![0.0; self.dim];
            self.pat.matrix.mul_acc(&x, &mut ax);
            for i in 0..self.nv {
                ax[i] -= shift.0 * x[i];
            }
            for i in self.nv..self.dim {
                ax[i] += shift.1 * x[i];
            }
            let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rn = norm_inf(&r) / scale;
            if !(rn < rel) {
                x = prev;
                cons = prev_cons;
                break;
            }
            rel = rn;
            prev_cons = norm_1(&r[self.nv..]);
            cons = prev_cons;
            if rn <= 1e-15 || round == 5 {
                break;
            }
            prev.copy_from_slice(&x);
            f.solve(&mut r);
            for i in 0..self.dim {
                x[i] += r[i];
            }
        }
        (x, rel, cons)
    }
}

/// Aggregate linear algebra statistics of a solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearAlgebraStats {
    pub factorizations: usize,
    pub flops: u64,
    pub kkt_dim: usize,
}

/// Solves `model` and returns the report together with factorisation
/// statistics.
pub fn solve_nlp_with_stats<M: NlpModel + ?Sized>(
    model: &M,
    opts: &IpmOptions,
    warm: Option<&WarmStart>,
) -> (SolveReport, LinearAlgebraStats) {
    let start = Instant::now();
    let n = model.num_vars();
    let m = model.num_cons();
    let mut xl = vec![0.0; n];
    let mut xu = vec![0.0; n];
    model.var_bounds(&mut xl, &mut xu);
    let mut gl = vec![0.0; m];
    let mut gu = vec![0.0; m];
    model.con_bounds(&mut gl, &mut gu);

    let mut x0 = vec![0.0; n];
    match warm {
        Some(w) if w.x.len() == n => x0.copy_from_slice(&w.x),
        _ => model.initial_point(&mut x0),
    }

    let inconsistent = xl.iter().zip(&xu).any(|(l, u)| l > u) || gl.iter().zip(&gu).any(|(l, u)| l > u);
    if inconsistent {
        let report = finish(model, SolveStatus::Infeasible, x0, vec![0.0; m], vec![0.0; n], vec![0.0; n], 0, start);
        return (report, LinearAlgebraStats::default());
    }

    let jac = model.jacobian_structure();
    let hess: Vec<(usize, usize)> = model
        .hessian_structure()
        .into_iter()
        .map(|(r, c)| (r.max(c), r.min(c)))
        .collect();

    // project the starting point into the bounds before evaluating scaling
    let mut x_proj = x0.clone();
    for k in 0..n {
        x_proj[k] = push_into(x_proj[k], xl[k], xu[k], opts);
    }

    let mut g0 = vec![0.0; n];
    model.objective_gradient(&x_proj, &mut g0);
    let gnorm = norm_inf(&g0);
    let auto = if gnorm.is_finite() && gnorm > 100.0 { 100.0 / gnorm } else { 1.0 };
    let sf = model.objective_scaling() * auto;

    let mut jv0 = vec![0.0; jac.len()];
    model.jacobian_values(&x_proj, &mut jv0);
    let mut rowmax = vec![0.0f64; m];
    for (k, &(i, _)) in jac.iter().enumerate() {
        rowmax[i] = rowmax[i].max(jv0[k].abs());
    }
    let dc: Vec<f64> = rowmax
        .iter()
        .map(|&r| if r.is_finite() && r > 100.0 { 100.0 / r } else { 1.0 })
        .collect();

    let mut slack = vec![None; m];
    let mut slack_row = Vec::new();
    let mut eq_rhs = vec![0.0; m];
    for i in 0..m {
        if gl[i] == gu[i] {
            eq_rhs[i] = dc[i] * gl[i];
        } else {
            slack[i] = Some(slack_row.len());
            slack_row.push(i);
        }
    }
    let ns = slack_row.len();
    let nv = n + ns;
    let prob = Internal {
        model,
        n,
        m,
        nv,
        sf,
        dc: dc.clone(),
        slack,
        slack_row: slack_row.clone(),
        eq_rhs,
        jac,
        hess,
        linear: model.is_linear(),
        xbuf: std::cell::RefCell::new(vec![0.0; m]),
    };

    // internal bounds, relaxed slightly
    let mut bnd = Bounds {
        lo: vec![-INF; nv],
        hi: vec![INF; nv],
        has_lo: vec![false; nv],
        has_hi: vec![false; nv],
    };
    for k in 0..n {
        bnd.lo[k] = xl[k];
        bnd.hi[k] = xu[k];
    }
    for (s, &i) in slack_row.iter().enumerate() {
        bnd.lo[n + s] = if gl[i] > -BIG_BOUND { dc[i] * gl[i] } else { -INF };
        bnd.hi[n + s] = if gu[i] < BIG_BOUND { dc[i] * gu[i] } else { INF };
    }
    for k in 0..nv {
        bnd.has_lo[k] = bnd.lo[k] > -BIG_BOUND;
        bnd.has_hi[k] = bnd.hi[k] < BIG_BOUND;
        if bnd.has_lo[k] {
            bnd.lo[k] -= opts.bound_relax * bnd.lo[k].abs().max(1.0);
        }
        if bnd.has_hi[k] {
            bnd.hi[k] += opts.bound_relax * bnd.hi[k].abs().max(1.0);
        }
    }

    let mut v = vec![0.0; nv];
    v[..n].copy_from_slice(&x_proj);
    {
        let mut gx = vec![0.0; m];
        model.constraints(&x_proj, &mut gx);
        for (s, &i) in slack_row.iter().enumerate() {
            v[n + s] = dc[i] * gx[i];
        }
    }
    for k in 0..nv {
        v[k] = push_into_internal(v[k], &bnd, k, opts);
    }

    let mut y = vec![0.0; m];
    if let Some(w) = warm {
        if let Some(wy) = &w.y {
            if wy.len() == m {
                for i in 0..m {
                    y[i] = wy[i] * sf / dc[i];
                }
            }
        }
    }
    let mut zl: Vec<f64> = bnd.has_lo.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = bnd.has_hi.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();

    let mu_min = opts.mu_min.unwrap_or(opts.tol / 10.0);
    let mut mu = opts.mu_init;
    let nb = bnd.count();

    let mut kkt = Kkt::new(&prob);
    let mut stats = LinearAlgebraStats {
        kkt_dim: kkt.dim,
        ..Default::default()
    };

    let mut grad = vec![0.0; nv];
    let mut c = vec![0.0; m];
    let mut jv = vec![0.0; prob.jac.len()];
    let mut hv = vec![0.0; prob.hess.len()];
    let mut nu = 1e-6;
    let mut dw_last = 0.0;
    // fast path: static shifts with diagonal pivots along the fill-reducing
    // order; `robust` switches to threshold pivoting for the rest of the solve
    let mut robust = false;
    let mut shift;
    let mut ls_fails = 0usize;
    let mut acceptable_count = 0usize;
    let mut last_err;
    let mut status;
    let mut iter = 0usize;

    let mut fval = prob.f(&v);
    prob.grad(&v, &mut grad);
    prob.cons(&v, &mut c);
    prob.jac_values(&v, &mut jv);
    if !fval.is_finite() || !all_finite(&grad) || !all_finite(&c) || !all_finite(&jv) {
        let (x, yo, zlo, zuo) = unscale(&prob, &v, &y, &zl, &zu);
        let report = finish(model, SolveStatus::NumericalFailure, x, yo, zlo, zuo, 0, start);
        return (report, stats);
    }

    loop {
        if !prob.linear {
            prob.hess_values(&v, &y, &mut hv);
        }

        let mut rd = grad.clone();
        prob.jac_t(&jv, &y, &mut rd);
        for k in 0..nv {
            rd[k] += zu[k] - zl[k];
        }
        let err_at = |mu_: f64| -> f64 {
            let sz = norm_1(&zl) + norm_1(&zu);
            let sd = (S_MAX.max((norm_1(&y) + sz) / ((m + nb).max(1) as f64))) / S_MAX;
            let sc = (S_MAX.max(sz / (nb.max(1) as f64))) / S_MAX;
            let mut comp: f64 = 0.0;
            for k in 0..nv {
                if bnd.has_lo[k] {
                    comp = comp.max((zl[k] * (v[k] - bnd.lo[k]) - mu_).abs());
                }
                if bnd.has_hi[k] {
                    comp = comp.max((zu[k] * (bnd.hi[k] - v[k]) - mu_).abs());
                }
            }
            (norm_inf(&rd) / sd).max(norm_inf(&c)).max(comp / sc)
        };

        let err0 = err_at(0.0);
        last_err = err0;
        trace!("iter {iter:4} f={fval:.10e} err={err0:.3e} mu={mu:.2e} nu={nu:.2e}");
        if err0 <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        if err0 <= opts.acceptable_tol {
            acceptable_count += 1;
            if acceptable_count >= opts.acceptable_iter {
                status = SolveStatus::Optimal;
                break;
            }
        } else {
            acceptable_count = 0;
        }
        if iter >= opts.max_iter {
            status = SolveStatus::IterationLimit;
            break;
        }
        if let Some(limit) = opts.max_time {
            if start.elapsed() > limit {
                status = SolveStatus::IterationLimit;
                break;
            }
        }

        while mu > mu_min && err_at(mu) <= KAPPA_EPS * mu {
            mu = mu_min.max((KAPPA_MU * mu).min(mu.powf(THETA_MU)));
        }

        // Newton system
        let mut sigma = vec![0.0; nv];
        let mut rhs = vec![0.0; kkt.dim];
        for k in 0..nv {
            let mut gphi = grad[k];
            if bnd.has_lo[k] {
                let d = v[k] - bnd.lo[k];
                sigma[k] += zl[k] / d;
                gphi -= mu / d;
            }
            if bnd.has_hi[k] {
                let d = bnd.hi[k] - v[k];
                sigma[k] += zu[k] / d;
                gphi += mu / d;
            }
            rhs[k] = -gphi;
        }
        let mut jty = vec![0.0; nv];
        prob.jac_t(&jv, &y, &mut jty);
        for k in 0..nv {
            rhs[k] -= jty[k];
        }
        for i in 0..m {
            rhs[nv + i] = -c[i];
        }
        let grad_phi: Vec<f64> = (0..nv).map(|k| -rhs[k] - jty[k]).collect();

        let mut dw = 0.0;
        // the static shifts keep the diagonal pivots usable, so the
        // factorisation follows the fill-reducing order
        let mut dcr = 0.0;
        let mut solve_noise = 0.0;
        let found = loop {
            shift = if robust { (0.0, 0.0) } else { (W_STATIC, C_STATIC) };
            let tol = if robust {
                opts.pivot_tol.max(ROBUST_PIVOT_TOL)
            } else {
                opts.pivot_tol
            };
            kkt.assemble(&sigma, &hv, &jv, dw + shift.0, dcr + shift.1);
            let fact = lu::factor(&kkt.pat.matrix, &kkt.order, tol);
            stats.factorizations += 1;
            let accepted = match fact {
                Err(_) => {
                    if dcr == 0.0 {
                        dcr = 1e-8 * mu.powf(0.25);
                    }
                    None
                }
                Ok(f) => {
                    stats.flops += f.flops;
                    let (sol, rel, cres) = kkt.solve(&f, &rhs, shift);
                    solve_noise = cres;
                    if !robust && !(rel <= SHIFTED_SOLVE_TOL) {
                        debug!("shifted KKT solve inaccurate ({rel:.1e}), switching to threshold pivoting");
                        robust = true;
                        continue;
                    }
                    if !all_finite(&sol) {
                        None
                    } else if prob.linear {
                        Some((sol, f))
                    } else {
                        let dv = &sol[..nv];
                        let dy = &sol[nv..];
                        let mut curv = prob.hess_quad(&hv, dv);
                        for k in 0..nv {
                            curv += (sigma[k] + dw) * dv[k] * dv[k];
                        }
                        curv += dcr * dot(dy, dy);
                        if curv >= KAPPA_CURV * dot(dv, dv) {
                            Some((sol, f))
                        } else {
                            None
                        }
                    }
                }
            };
            if let Some(ok) = accepted {
                if dw > 0.0 {
                    dw_last = dw;
                }
                break Some(ok);
            }
            dw = if dw == 0.0 {
                if dw_last == 0.0 {
                    1e-4
                } else {
                    (dw_last / 3.0).max(1e-20)
                }
            } else if dw_last == 0.0 {
                dw * 100.0
            } else {
                dw * 8.0
            };
            if dw > 1e40 {
                break None;
            }
        };
        let Some((sol, factors)) = found else {
            debug!("regularisation failed at iteration {iter}");
            status = SolveStatus::NumericalFailure;
            break;
        };
        let dv = sol[..nv].to_vec();
        let dy = sol[nv..].to_vec();

        let tau = (1.0 - mu).max(0.99);
        let alpha_max = bnd.max_step(&v, &dv, tau);

        // penalty update
        let theta = norm_1(&c);
        let gphi_dv = dot(&grad_phi, &dv);
        if theta > 0.0 {
            let whv = if prob.linear { 0.0 } else { prob.hess_quad(&hv, &dv) };
            let sigma_q = if whv > 0.0 { 0.5 * whv } else { 0.0 };
            let trial = (gphi_dv + sigma_q) / ((1.0 - RHO_PENALTY) * theta);
            if nu < trial {
                nu = 2.0 * trial;
            }
        }
        let ddir = gphi_dv - nu * theta;
        let phi0 = fval + bnd.barrier(&v, mu) + nu * theta;
        // roundoff in the merit and the constraint residual left by the
        // linear solve
        let slack_tol = 10.0 * f64::EPSILON * phi0.abs().max(1.0) + 2.0 * nu * solve_noise;

        let merit = |vt: &[f64], ct: &mut [f64]| -> Option<(f64, f64)> {
            let b = bnd.barrier(vt, mu);
            if !b.is_finite() {
                return None;
            }
            let ft = prob.f(vt);
            prob.cons(vt, ct);
            if !ft.is_finite() || !all_finite(ct) {
                return None;
            }
            Some((ft + b + nu * norm_1(ct), ft))
        };

        let mut alpha = alpha_max;
        let mut ct = vec![0.0; m];
        let mut accepted: Option<(Vec<f64>, Vec<f64>, f64)> = None; // (dv, dy, alpha)
        let mut first = true;
        for _ in 0..60 {
            let vt: Vec<f64> = (0..nv).map(|k| v[k] + alpha * dv[k]).collect();
            if let Some((phit, _)) = merit(&vt, &mut ct) {
                if phit <= phi0 + ETA_ARMIJO * alpha * ddir + slack_tol {
                    accepted = Some((dv.clone(), dy.clone(), alpha));
                    break;
                }
                if first && norm_1(&ct) >= theta && m > 0 {
                    // second order correction
                    let mut rhs_soc = rhs.clone();
                    for i in 0..m {
                        rhs_soc[nv + i] = -(alpha * c[i] + ct[i]);
                    }
                    let (soc, _, _) = kkt.solve(&factors, &rhs_soc, shift);
                    if all_finite(&soc) {
                        let dvs = soc[..nv].to_vec();
                        let a_soc = bnd.max_step(&v, &dvs, tau);
                        let vs: Vec<f64> = (0..nv).map(|k| v[k] + a_soc * dvs[k]).collect();
                        let mut cs = vec![0.0; m];
                        if let Some((phis, _)) = merit(&vs, &mut cs) {
                            if phis <= phi0 + ETA_ARMIJO * alpha * ddir + slack_tol {
                                accepted = Some((dvs, soc[nv..].to_vec(), a_soc));
                                break;
                            }
                        }
                    }
                }
            }
            first = false;
            alpha *= 0.5;
            if alpha < 1e-14 {
                break;
            }
        }
        let (dv, dy, alpha) = match accepted {
            Some(a) => {
                ls_fails = 0;
                a
            }
            None => {
                ls_fails += 1;
                debug!("line search failed at iteration {iter} ({ls_fails} in a row)");
                if ls_fails >= MAX_LS_FAILS {
                    status = SolveStatus::NumericalFailure;
                    break;
                }
                // accept the step anyway; finite evaluations are still required
                let mut a = alpha_max;
                let mut found = None;
                for _ in 0..60 {
                    let vt: Vec<f64> = (0..nv).map(|k| v[k] + a * dv[k]).collect();
                    if merit(&vt, &mut ct).is_some() {
                        found = Some(a);
                        break;
                    }
                    a *= 0.5;
                }
                match found {
                    Some(a) => (dv, dy, a),
                    None => {
                        status = SolveStatus::NumericalFailure;
                        break;
                    }
                }
            }
        };

        // bound multiplier step
        let mut dzl = vec![0.0; nv];
        let mut dzu = vec![0.0; nv];
        for k in 0..nv {
            if bnd.has_lo[k] {
                let d = v[k] - bnd.lo[k];
                dzl[k] = (mu - zl[k] * d - zl[k] * dv[k]) / d;
            }
            if bnd.has_hi[k] {
                let d = bnd.hi[k] - v[k];
                dzu[k] = (mu - zu[k] * d + zu[k] * dv[k]) / d;
            }
        }
        let az = max_step_z(&zl, &dzl, tau).min(max_step_z(&zu, &dzu, tau));
        trace!("  step {alpha:.3e} (max {alpha_max:.3e}, z {az:.3e}) robust={robust} solve noise {solve_noise:.2e}");

        for k in 0..nv {
            v[k] += alpha * dv[k];
        }
        for i in 0..m {
            y[i] += alpha * dy[i];
        }
        for k in 0..nv {
            if bnd.has_lo[k] {
                zl[k] += az * dzl[k];
                let d = v[k] - bnd.lo[k];
                zl[k] = zl[k].clamp(mu / (KAPPA_SIGMA * d), KAPPA_SIGMA * mu / d);
            }
            if bnd.has_hi[k] {
                zu[k] += az * dzu[k];
                let d = bnd.hi[k] - v[k];
                zu[k] = zu[k].clamp(mu / (KAPPA_SIGMA * d), KAPPA_SIGMA * mu / d);
            }
        }
        iter += 1;

        if norm_inf(&v) > 1e20 {
            status = SolveStatus::NumericalFailure;
            break;
        }
        fval = prob.f(&v);
        prob.grad(&v, &mut grad);
        prob.cons(&v, &mut c);
        prob.jac_values(&v, &mut jv);
        if !fval.is_finite() || !all_finite(&grad) || !all_finite(&c) || !all_finite(&jv) {
            status = SolveStatus::NumericalFailure;
            break;
        }
    }

    if status == SolveStatus::NumericalFailure && last_err <= opts.acceptable_tol {
        status = SolveStatus::Optimal;
    }
    debug!("ipm finished: {status} after {iter} iterations, err {last_err:.3e}");
    let (x, yo, zlo, zuo) = unscale(&prob, &v, &y, &zl, &zu);
    (finish(model, status, x, yo, zlo, zuo, iter, start), stats)
}

/// Solves `model` with the interior point method.
pub fn solve_nlp<M: NlpModel + ?Sized>(model: &M, opts: &IpmOptions, warm: Option<&WarmStart>) -> SolveReport {
    solve_nlp_with_stats(model, opts, warm).0
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

fn push_into(x: f64, lo: f64, hi: f64, opts: &IpmOptions) -> f64 {
    let has_lo = lo > -BIG_BOUND;
    let has_hi = hi < BIG_BOUND;
    let mut x = x;
    if has_lo && has_hi && lo == hi {
        return lo;
    }
    if has_lo {
        let mut p = opts.bound_push * lo.abs().max(1.0);
        if has_hi {
            p = p.min(opts.bound_frac * (hi - lo));
        }
        x = x.max(lo + p);
    }
    if has_hi {
        let mut p = opts.bound_push * hi.abs().max(1.0);
        if has_lo {
            p = p.min(opts.bound_frac * (hi - lo));
        }
        x = x.min(hi - p);
    }
    x
}

fn push_into_internal(x: f64, b: &Bounds, k: usize, opts: &IpmOptions) -> f64 {
    let lo = if b.has_lo[k] { b.lo[k] } else { -INF };
    let hi = if b.has_hi[k] { b.hi[k] } else { INF };
    if b.has_lo[k] && b.has_hi[k] && !(lo < hi) {
        return 0.5 * (lo + hi);
    }
    push_into(x, lo, hi, opts)
}

fn unscale<M: NlpModel + ?Sized>(
    p: &Internal<M>,
    v: &[f64],
    y: &[f64],
    zl: &[f64],
    zu: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = p.n;
    let x = v[..n].to_vec();
    let yo: Vec<f64> = (0..p.m).map(|i| y[i] * p.dc[i] / p.sf).collect();
    let zlo: Vec<f64> = zl[..n].iter().map(|z| z / p.sf).collect();
    let zuo: Vec<f64> = zu[..n].iter().map(|z| z / p.sf).collect();
    (x, yo, zlo, zuo)
}

#[allow(clippy::too_many_arguments)]
fn finish<M: NlpModel + ?Sized>(
    model: &M,
    status: SolveStatus,
    x: Vec<f64>,
    y: Vec<f64>,
    z_l: Vec<f64>,
    z_u: Vec<f64>,
    iterations: usize,
    start: Instant,
) -> SolveReport {
    let residuals = kkt_residuals(model, &x, &y, &z_l, &z_u);
    let objective = model.objective(&x);
    SolveReport {
        status,
        x,
        objective,
        y,
        z_l,
        z_u,
        residuals,
        iterations,
        wall_time: start.elapsed(),
    }
}

/// Unscaled residuals of the first-order conditions of `model`.
pub fn kkt_residuals<M: NlpModel + ?Sized>(
    model: &M,
    x: &[f64],
    y: &[f64],
    z_l: &[f64],
    z_u: &[f64],
) -> KktResiduals {
    let n = model.num_vars();
    let m = model.num_cons();
    let mut xl = vec![0.0; n];
    let mut xu = vec![0.0; n];
    model.var_bounds(&mut xl, &mut xu);
    let mut gl = vec![0.0; m];
    let mut gu = vec![0.0; m];
    model.con_bounds(&mut gl, &mut gu);
    let mut g = vec![0.0; m];
    model.constraints(x, &mut g);
    let mut primal: f64 = 0.0;
    for i in 0..m {
        primal = primal.max(gl[i] - g[i]).max(g[i] - gu[i]);
    }
    for k in 0..n {
        primal = primal.max(xl[k] - x[k]).max(x[k] - xu[k]);
    }
    let mut r = vec![0.0; n];
    model.objective_gradient(x, &mut r);
    let jac = model.jacobian_structure();
    let mut jv = vec![0.0; jac.len()];
    model.jacobian_values(x, &mut jv);
    for (k, &(i, j)) in jac.iter().enumerate() {
        r[j] += jv[k] * y[i];
    }
    let mut comp: f64 = 0.0;
    for k in 0..n {
        r[k] += z_u[k] - z_l[k];
        if xl[k] > -BIG_BOUND {
            comp = comp.max((z_l[k] * (x[k] - xl[k])).abs());
        }
        if xu[k] < BIG_BOUND {
            comp = comp.max((z_u[k] * (xu[k] - x[k])).abs());
        }
    }
    for i in 0..m {
        if gl[i] != gu[i] {
            if y[i] < 0.0 && gl[i] > -BIG_BOUND {
                comp = comp.max((y[i] * (g[i] - gl[i])).abs());
            }
            if y[i] > 0.0 && gu[i] < BIG_BOUND {
                comp = comp.max((y[i] * (gu[i] - g[i])).abs());
            }
        }
    }
    KktResiduals {
        primal: primal.max(0.0),
        dual: norm_inf(&r),
        complementarity: comp,
    }
}
