use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmtError {
    #[error("invalid channel specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    /// An argument fell outside the region where a formula is defined.
    #[error("domain error in {context}: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    /// A logarithm or square root would have received a non-positive argument.
    #[error("numerical domain error in {context}: {detail}")]
    NumericalDomain {
        context: &'static str,
        detail: String,
    },

    #[error("exponential outage bound is invalid: rate {rate} exceeds mean capacity {mean}")]
    BoundInvalid { rate: f64, mean: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid Monte-Carlo plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T, E = DmtError> = std::result::Result<T, E>;

pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> DmtError {
    DmtError::Domain {
        context,
        detail: detail.into(),
    }
}
