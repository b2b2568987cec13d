use std::fmt;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration limit",
            SolveStatus::NumericalFailure => "numerical failure",
        };
        f.write_str(s)
    }
}

/// Unscaled first-order residuals at the returned point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktResiduals {
    /// Largest violation of constraint rows and variable bounds.
    pub primal: f64,
    /// Infinity norm of the Lagrangian gradient.
    pub dual: f64,
    /// Largest complementarity product (or duality gap for linear programs).
    pub complementarity: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Constraint multipliers, sign convention `grad f + J^T y - z_l + z_u = 0`.
    pub y: Vec<f64>,
    pub z_l: Vec<f64>,
    pub z_u: Vec<f64>,
    pub residuals: KktResiduals,
    pub iterations: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
