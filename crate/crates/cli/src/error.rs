use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or input files.
    #[error("{0}")]
    Config(String),
    /// The simulated plant left its energy window.
    #[error("infeasible hour: {0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io { .. } | CliError::Runtime(_) => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<frmpc_core::error::MarketError> for CliError {
    fn from(e: frmpc_core::error::MarketError) -> Self {
        CliError::Config(format!("market data: {e}"))
    }
}

impl From<frmpc_core::error::ParamError> for CliError {
    fn from(e: frmpc_core::error::ParamError) -> Self {
        CliError::Config(format!("cell parameters: {e}"))
    }
}

impl From<frmpc_core::error::StrategyError> for CliError {
    fn from(e: frmpc_core::error::StrategyError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("writing CSV: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("writing JSON: {e}"))
    }
}
