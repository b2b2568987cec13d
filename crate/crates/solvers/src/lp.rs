//! Linear programs on top of the interior point method.

use crate::ipm::{kkt_residuals, solve_nlp, IpmOptions, NlpModel, WarmStart};
use crate::report::{SolveReport, SolveStatus};
use crate::INF;

/// `min c^T x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper`
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Coordinate entries `(row, col, value)`; duplicates are summed.
    pub a: Vec<(usize, usize, f64)>,
    pub row_lower: Vec<f64>,
    pub row_upper: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            c: vec![0.0; num_vars],
            a: Vec::new(),
            row_lower: Vec::new(),
            row_upper: Vec::new(),
            col_lower: vec![-INF; num_vars],
            col_upper: vec![INF; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_lower.len()
    }

    /// Appends a row and returns its index.
    pub fn add_row(&mut self, entries: &[(usize, f64)], lower: f64, upper: f64) -> usize {
        let r = self.row_lower.len();
        for &(j, v) in entries {
            self.a.push((r, j, v));
        }
        self.row_lower.push(lower);
        self.row_upper.push(upper);
        r
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_rows()];
        for &(i, j, v) in &self.a {
            g[i] += v * x[j];
        }
        g
    }

    /// Dual objective for multipliers in the sign convention of
    /// [`SolveReport`]. Infinite bounds contribute nothing.
    pub fn dual_objective(&self, y: &[f64], z_l: &[f64], z_u: &[f64]) -> f64 {
        let mut d = 0.0;
        for k in 0..self.num_vars() {
            if self.col_lower[k] > -1e19 {
                d += z_l[k] * self.col_lower[k];
            }
            if self.col_upper[k] < 1e19 {
                d -= z_u[k] * self.col_upper[k];
            }
        }
        for i in 0..self.num_rows() {
            let b = if y[i] > 0.0 { self.row_upper[i] } else { self.row_lower[i] };
            if b.abs() < 1e19 {
                d -= y[i] * b;
            }
        }
        d
    }
}

impl NlpModel for LinearProgram {
    fn num_vars(&self) -> usize {
        self.c.len()
    }
    fn num_cons(&self) -> usize {
        self.row_lower.len()
    }
    fn var_bounds(&self, xl: &mut [f64], xu: &mut [f64]) {
        xl.copy_from_slice(&self.col_lower);
        xu.copy_from_slice(&self.col_upper);
    }
    fn con_bounds(&self, gl: &mut [f64], gu: &mut [f64]) {
        gl.copy_from_slice(&self.row_lower);
        gu.copy_from_slice(&self.row_upper);
    }
    fn initial_point(&self, x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(a, b)| a * b).sum()
    }
    fn objective_gradient(&self, _x: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.c);
    }
    fn constraints(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, v) in &self.a {
            g[i] += v * x[j];
        }
    }
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.a.iter().map(|&(i, j, _)| (i, j)).collect()
    }
    fn jacobian_values(&self, _x: &[f64], vals: &mut [f64]) {
        for (k, &(_, _, v)) in self.a.iter().enumerate() {
            vals[k] = v;
        }
    }
    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        Vec::new()
    }
    fn hessian_values(&self, _x: &[f64], _f: f64, _l: &[f64], _vals: &mut [f64]) {}
    fn is_linear(&self) -> bool {
        true
    }
}

/// Tolerances met by every `Optimal` report from [`solve_lp`].
pub const LP_PRIMAL_TOL: f64 = 1e-8;
pub const LP_DUAL_TOL: f64 = 1e-8;
pub const LP_GAP_TOL: f64 = 1e-8;

pub fn lp_options() -> IpmOptions {
    IpmOptions {
        tol: 1e-10,
        acceptable_tol: 1e-9,
        max_iter: 500,
        ..IpmOptions::default()
    }
}

/// Solves a linear program. `Optimal` reports satisfy primal and dual
/// residuals of `1e-8` and a complementarity gap of `1e-8 (1 + |obj|)`; the
/// gap is stored in `residuals.complementarity`.
pub fn solve_lp(lp: &LinearProgram, warm: Option<&WarmStart>) -> SolveReport {
    let bad_bounds = lp.col_lower.iter().zip(&lp.col_upper).any(|(l, u)| l > u)
        || lp.row_lower.iter().zip(&lp.row_upper).any(|(l, u)| l > u);
    let mut opts = lp_options();
    let nb = lp.col_lower.iter().filter(|v| **v > -1e19).count()
        + lp.col_upper.iter().filter(|v| **v < 1e19).count()
        + lp.num_rows();
    opts.mu_min = Some((1e-10 / (nb.max(1) as f64)).min(opts.tol / 10.0));
    let mut rep = solve_nlp(lp, &opts, warm);
    if bad_bounds {
        rep.status = SolveStatus::Infeasible;
        return rep;
    }
    finalize(lp, &mut rep);
    if rep.status != SolveStatus::Optimal && phase_one_infeasible(lp) {
        rep.status = SolveStatus::Infeasible;
    }
    rep
}

fn finalize(lp: &LinearProgram, rep: &mut SolveReport) {
    let r = kkt_residuals(lp, &rep.x, &rep.y, &rep.z_l, &rep.z_u);
    let gap = complementarity_gap(lp, &rep.x, &rep.y, &rep.z_l, &rep.z_u);
    rep.residuals.primal = r.primal;
    rep.residuals.dual = r.dual;
    rep.residuals.complementarity = gap;
    if rep.status == SolveStatus::Optimal
        && (r.primal > LP_PRIMAL_TOL || r.dual > LP_DUAL_TOL || gap > LP_GAP_TOL * (1.0 + rep.objective.abs()))
    {
        log::debug!(
            "lp residuals above contract: primal {:.2e} dual {:.2e} gap {:.2e}",
            r.primal,
            r.dual,
            gap
        );
        rep.status = SolveStatus::NumericalFailure;
    }
}

/// `Σ z_l (x - l) + z_u (u - x)` plus the row terms `|y| · slack` of the
/// inequality rows. Equals the primal-dual objective gap at a feasible point;
/// bound violations count toward the primal residual instead.
fn complementarity_gap(lp: &LinearProgram, x: &[f64], y: &[f64], z_l: &[f64], z_u: &[f64]) -> f64 {
    let mut gap = 0.0;
    for k in 0..lp.num_vars() {
        if lp.col_lower[k] > -1e19 {
            gap += z_l[k].abs() * (x[k] - lp.col_lower[k]).max(0.0);
        }
        if lp.col_upper[k] < 1e19 {
            gap += z_u[k].abs() * (lp.col_upper[k] - x[k]).max(0.0);
        }
    }
    let act = lp.row_activity(x);
    for i in 0..lp.num_rows() {
        if lp.row_lower[i] == lp.row_upper[i] {
            continue;
        }
        let b = if y[i] > 0.0 { lp.row_upper[i] } else { lp.row_lower[i] };
        gap += if b.abs() < 1e19 { y[i].abs() * (b - act[i]).abs() } else { y[i].abs() };
    }
    gap
}

/// Minimises the total row violation; a strictly positive optimum proves
/// infeasibility of the row system within the column bounds.
fn phase_one_infeasible(lp: &LinearProgram) -> bool {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut p1 = LinearProgram::new(n + 2 * m);
    p1.c[..n].iter_mut().for_each(|c| *c = 0.0);
    for k in 0..2 * m {
        p1.c[n + k] = 1.0;
        p1.col_lower[n + k] = 0.0;
    }
    p1.col_lower[..n].copy_from_slice(&lp.col_lower);
    p1.col_upper[..n].copy_from_slice(&lp.col_upper);
    p1.a = lp.a.clone();
    for i in 0..m {
        p1.a.push((i, n + i, 1.0));
        p1.a.push((i, n + m + i, -1.0));
    }
    p1.row_lower = lp.row_lower.clone();
    p1.row_upper = lp.row_upper.clone();
    let opts = IpmOptions {
        tol: 1e-9,
        max_iter: 500,
        ..IpmOptions::default()
    };
    let rep = solve_nlp(&p1, &opts, None);
    matches!(rep.status, SolveStatus::Optimal) && rep.objective > 1e-6
}
