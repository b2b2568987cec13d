//! Multiscale model predictive control of a lithium-ion battery selling
//! frequency-regulation capacity.
//!
//! The crate contains the single-particle cell model with SEI fade, an
//! hour-level plant simulator, market data handling, optimal-control
//! transcriptions, the four dispatch strategies and the closed-loop driver.

pub mod ad;
pub mod cell;
pub mod closed_loop;
pub mod error;
pub mod market;
pub mod ocp;
pub mod ocv;
pub mod params;
pub mod sim;
pub mod strategy;

pub use cell::{AlgebraicState, CellState};
pub use closed_loop::{run, ClosedLoopLedger, RunConfig, RunSummary};
pub use market::MarketData;
pub use params::CellParameters;
pub use sim::{HourlyCommitment, Plant, PlantState};
pub use strategy::{StrategyConfig, StrategyKind};
