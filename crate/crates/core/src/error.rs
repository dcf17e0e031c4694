use thiserror::Error;

/// Errors raised while building or solving moment relaxations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree cap exceeded: result degree {degree} is above the cap {cap}")]
    DegreeCapExceeded { degree: u32, cap: u32 },

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("basis mismatch: expected {expected:?}, found {found:?}")]
    BasisMismatch {
        expected: crate::polynomial::Basis,
        found: crate::polynomial::Basis,
    },

    #[error("noise moments missing: relaxation needs noise moments up to degree {required_degree}, have {available_degree}")]
    MissingNoiseMoments {
        required_degree: u32,
        available_degree: u32,
    },

    #[error("moments missing: need moments up to degree {required_degree}, have {available_degree}")]
    MissingMoments {
        required_degree: u32,
        available_degree: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("trajectory left the escape box at iteration {iteration}; last in-box state {last_state:?}")]
    Escaped {
        iteration: u64,
        last_state: Vec<f64>,
    },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
