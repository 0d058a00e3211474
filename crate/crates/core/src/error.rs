use thiserror::Error;

use crate::trees::StabilizationCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An internal invariant failed; the inputs are inconsistent or there is a bug upstream.
    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("insufficient K/window: {message}")]
    InsufficientCertification { message: String, certificates: Vec<StabilizationCertificate> },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
