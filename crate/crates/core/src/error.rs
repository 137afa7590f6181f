use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("operator is not selfadjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("operator is not an orthogonal projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },

    #[error("operator is not odd with respect to the grading (residual {residual:.3e})")]
    NotOdd { residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("ambiguous rank: gap ratio {gap_ratio:.3e} below threshold {threshold:.3e}")]
    AmbiguousRank { gap_ratio: f64, threshold: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("function is not defined on the spectrum (value {value} at eigenvalue {at})")]
    UndefinedFunction { value: f64, at: f64 },

    #[error("grid resolution too coarse: step {step} must be below {limit}")]
    Resolution { step: f64, limit: f64 },

    #[error("unstable result: {0}")]
    Unstable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by numerical ambiguity rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::AmbiguousRank { .. }
                | Error::Quadrature(_)
                | Error::Resolution { .. }
                | Error::Unstable(_)
        )
    }
}
