use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid irrational basis: {0}")]
    InvalidBasis(String),

    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("value {value} outside working interval [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid shape mismatch: {0}")]
    Shape(String),

    #[error("invalid scheme configuration: {0}")]
    InvalidScheme(String),

    #[error("monotonicity violation: alpha {alpha} below Lipschitz bound {bound}")]
    Monotonicity { alpha: f64, bound: f64 },

    #[error("numerical failure at step {step} (t = {time}): {detail}")]
    NumericalFailure {
        step: u64,
        time: f64,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
