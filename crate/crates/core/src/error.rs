use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OiaError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario parameters violate a structural constraint.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The nulled effective channel is numerically singular.
    #[error("singular effective channel (condition number {cond:.3e})")]
    SingularChannel { cond: f64 },

    /// A codebook file could not be parsed.
    #[error("codebook parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, OiaError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(OiaError::Domain(msg.into()))
}
