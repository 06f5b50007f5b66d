use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{what} needs 2^{needed_log2:.1} amplitudes, cap is 2^{cap_log2:.1}")]
    CapExceeded { what: &'static str, needed_log2: f64, cap_log2: f64 },
    #[error("blocking too large: d={d}, p={p} exceeds physical-dimension cap {cap}")]
    BlockingTooLarge { d: usize, p: usize, cap: usize },
    #[error("ill-conditioned spectrum: peripheral gap {gap:.3e}")]
    IllConditioned { gap: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{what} failed with residual {residual:.3e}")]
    Numerical { what: String, residual: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
