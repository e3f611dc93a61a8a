use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid orders at index {index}: {reason}")]
    InvalidOrders { index: usize, reason: String },

    #[error("validation failed at {path}: {reason}")]
    Validation { path: String, reason: String },

    #[error(
        "singular symbol matrix at frequency {xi:?}: sigma_min = {sigma_min:.3e}, \
         nearest symbol eigenvalue {eig}"
    )]
    SingularFrequency {
        xi: Vec<f64>,
        sigma_min: f64,
        eig: Complex64,
    },

    #[error("degenerate resolution: {0}")]
    DegenerateResolution(String),

    #[error("operator size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("perturbation threshold search exceeded cap {cap:.3e}")]
    ThresholdCap { cap: f64 },

    #[error("parameter-dependent norm requires lambda != 0")]
    ZeroLambda,

    #[error("formal adjoint requires s_j = 0 for all rows (found s[{index}] = {value})")]
    AdjointOrders { index: usize, value: i64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
