use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("reading parameter file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing parameter file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid parameter {name}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("open-circuit table: {0}")]
    Ocv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error("{what} concentration {value} outside [0, {max}]")]
    Domain { what: &'static str, value: f64, max: f64 },
    #[error("step solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("FR signal {value} at hour {hour}, step {step} outside [-1, 1]")]
    Range { hour: usize, step: usize, value: f64 },
    #[error("missing FR signal sample at hour {hour}, step {step}")]
    Gap { hour: usize, step: usize },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("negative FR price {value} at hour {hour}")]
    NegativeFrPrice { hour: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcpError {
    #[error("inconsistent configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("invalid strategy configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ocp(#[from] OcpError),
}
