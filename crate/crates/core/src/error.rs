use thiserror::Error;

use crate::approx::SearchTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("latent vector is not in the image of the encoder: {0}")]
    InfeasibleLatent(String),

    #[error("size error: {0}")]
    Size(String),

    /// The zero search ran out of budget. The best point found is kept in the
    /// trace so the caller can decide whether to escalate.
    #[error("collision search exhausted its budget (best residual {best_residual:.3e})")]
    SearchExhausted {
        best_residual: f64,
        trace: Box<SearchTrace>,
    },

    #[error("certificate does not belong to this encoder: {0}")]
    CertMismatch(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDim(String),

    #[error("probe set degenerate: {0}")]
    ProbeDegenerate(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn size(msg: impl Into<String>) -> Self {
        Error::Size(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
