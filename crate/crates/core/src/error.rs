use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports.
///
/// Rationals are carried as their `p/q` renderings so the error type does not
/// depend on the scalar type of the computation that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("point {0} lies outside [0, 1]")]
    Domain(String),

    #[error("invalid node list: {0}")]
    InvalidMap(String),

    #[error("invalid interval ({0}, {1}): need 0 <= left < right <= 1")]
    InvalidInterval(String, String),

    #[error("({0}, {1}) is not an orbital of the map")]
    NotAnOrbital(String, String),

    #[error("the map does not preserve ({0}, {1})")]
    NotInvariant(String, String),

    #[error("orbital ({0}, {1}) straddles an end of ({2}, {3})")]
    Straddle(String, String, String, String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid tower: {0}")]
    InvalidTower(String),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resource cap exceeded: {what} (limit {limit})")]
    Resource { what: String, limit: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("verification mismatch at step {step}: {reason}")]
    Mismatch { step: usize, reason: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn resource(what: impl Into<String>, limit: u64) -> Self {
        Error::Resource { what: what.into(), limit }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
