use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size is zero")]
    ZeroSample,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid probability table: {0}")]
    InvalidTable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cell ({row}, {col}) is zero; restrict to the observed support first")]
    ZeroCellInSupport { row: usize, col: usize },

    #[error("insufficient support: {i_hat} occupied row(s) and {j_hat} occupied column(s), need at least 2 of each")]
    InsufficientSupport { i_hat: usize, j_hat: usize },

    #[error("degenerate variance estimate (sigma^2 = {sigma2:e}); the normal approximation needs non-uniform marginals and lambda != 1")]
    DegenerateVariance { sigma2: f64 },

    #[error("invalid degrees of freedom: {0}")]
    InvalidDf(i64),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for the errors that mean "the statistic is undefined on this
    /// sample" rather than "the input was malformed".
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateVariance { .. } | Error::InsufficientSupport { .. })
    }
}
