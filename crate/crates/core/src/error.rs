use thiserror::Error;

/// Errors raised by the solvers, the analysis toolkit and the file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: non-finite entries, empty shapes, mismatched dimensions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematically undefined request (zero matrix, zero weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A row with zero Euclidean norm cannot define a hyperplane.
    #[error("row {row} has zero norm")]
    ZeroRow { row: usize },

    /// `b` is not in the range of `A` to within the consistency tolerance.
    #[error("system is inconsistent: residual ||A A^+ b - b|| = {residual:e}")]
    Consistency { residual: f64 },

    /// Exhaustive enumeration over `m!` permutations was refused.
    #[error(
        "{m} rows exceeds the enumeration limit of {limit}; \
         use sampled estimation (--sample N) for a lower bound instead"
    )]
    Capacity { m: usize, limit: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
