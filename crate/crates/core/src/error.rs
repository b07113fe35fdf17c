use thiserror::Error;

/// Errors produced anywhere in the model, solver or simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed configuration: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("missing {0}")]
    Missing(&'static str),

    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("parameter violations: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Violations(Vec<crate::params::Violation>),

    #[error("attempt-probability fixed point did not converge: {0}")]
    NoConvergence(String),

    #[error("population {population} exceeds the enumeration bound {bound}")]
    EnumerationBound { population: u32, bound: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { field, reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
