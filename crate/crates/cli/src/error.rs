use thiserror::Error;

use rdd_core::balance::BalanceError;
use rdd_core::ci::CiError;
use rdd_core::estimation::EstimationError;
use rdd_core::simulator::SimulatorError;
use rdd_core::ModelError;

use crate::ingest::IngestError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ESTIMATION: i32 = 2;
pub const EXIT_NOT_DERIVABLE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs.
    #[error("{message}")]
    Usage { name: &'static str, message: String },
    /// The computation itself failed.
    #[error("{message}")]
    Estimation { name: &'static str, message: String },
    #[error("not derivable")]
    NotDerivable,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage {
            name: "UsageError",
            message: message.into(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Usage { name, .. } | CliError::Estimation { name, .. } => name,
            CliError::NotDerivable => "NotDerivable",
            CliError::Io(_) => "IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } | CliError::Io(_) => EXIT_USAGE,
            CliError::Estimation { .. } => EXIT_ESTIMATION,
            CliError::NotDerivable => EXIT_NOT_DERIVABLE,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Usage {
            name: e.name(),
            message: e.to_string(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage {
            name: "InvalidInput",
            message: e.to_string(),
        }
    }
}

impl From<CiError> for CliError {
    fn from(e: CiError) -> Self {
        CliError::Usage {
            name: e.name(),
            message: e.to_string(),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        CliError::Estimation {
            name: e.name(),
            message: e.to_string(),
        }
    }
}

impl From<BalanceError> for CliError {
    fn from(e: BalanceError) -> Self {
        CliError::Estimation {
            name: e.name(),
            message: e.to_string(),
        }
    }
}

impl From<SimulatorError> for CliError {
    fn from(e: SimulatorError) -> Self {
        let name = e.name();
        match e {
            SimulatorError::AllRepetitionsFailed(_) => CliError::Estimation {
                name,
                message: e.to_string(),
            },
            _ => CliError::Usage {
                name,
                message: e.to_string(),
            },
        }
    }
}
