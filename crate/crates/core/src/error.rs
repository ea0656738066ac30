use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular matrix (det = {det:e})")]
    SingularMatrix { det: f64 },

    /// A power piece raised to an exponent whose singularity lies inside the segment.
    #[error("non-integrable density on segment {segment} (exponent {exponent})")]
    NonIntegrable { segment: usize, exponent: f64 },

    #[error("cell {cell} is not covered by any cube of the family")]
    Coverage { cell: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Calderon-Zygmund sandwich violated at k = {k} (average {average:e}, bound {bound:e})")]
    Sandwich { k: i32, average: f64, bound: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
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
