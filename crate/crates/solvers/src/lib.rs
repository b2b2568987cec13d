//! Sparse primal-dual interior-point solvers.
//!
//! Problems are stated in the form
//!
//! ```txt
//!     min  f(x)
//!     s.t. g_l <= g(x) <= g_u
//!          x_l <= x    <= x_u
//! ```
//!
//! Rows with `g_l == g_u` are equalities; every other row receives a bounded
//! slack. Linear programs are the special case with linear `f`, `g` and no
//! Hessian, and are solved by the same engine.

pub mod dump;
pub mod ipm;
pub mod lp;
pub mod lu;
pub mod ordering;
pub mod report;
pub mod sparse;

pub use ipm::{solve_nlp, IpmOptions, NlpModel, WarmStart};
pub use lp::{solve_lp, LinearProgram};
pub use report::{KktResiduals, SolveReport, SolveStatus};

/// Values at or beyond this magnitude are treated as infinite bounds.
pub const INF: f64 = 1e20;
