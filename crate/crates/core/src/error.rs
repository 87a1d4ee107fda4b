use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NonConvergence { what: String, residual: f64 },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("absorption probability {p} exceeds 1 at step {step}; reduce lambda or epsilon")]
    AbsorptionOverflow { step: usize, p: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
