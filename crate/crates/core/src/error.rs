use thiserror::Error;

/// Errors produced anywhere in the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unsupported combination: p={p}, q={q}")]
    Unsupported { p: u8, q: &'static str },

    #[error("enumeration guard exceeded: {0}")]
    Guard(String),

    #[error("permutation matching limit: K={0} exceeds 8")]
    PermutationLimit(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("big-M unbounded: an override is required when the norm bound gives no finite Hölder bound")]
    BigMUnbounded,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}
