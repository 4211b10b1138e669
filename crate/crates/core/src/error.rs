use thiserror::Error;

pub type Result<T> = std::result::Result<T, QetError>;

#[derive(Debug, Error)]
pub enum QetError {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("site {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: operator acts on {expected} sites, state has {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (imaginary residue {residue:e})")]
    NotHermitian { residue: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("calibration failed: max |<g|T_n|g>| = {max_density:e}")]
    CalibrationFailed { max_density: f64 },

    #[error("operator supports overlap: {0}")]
    OverlappingSupport(String),

    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("channel has no Kraus set for outcome {0}")]
    MissingKraus(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
