use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Hardy construction needs 0 < ε < 1; product and maximally
    /// entangled states give a zero Hardy fraction.
    #[error("degenerate entanglement: epsilon = {0} (Hardy test needs 0 < epsilon < 1)")]
    DegenerateEntanglement(f64),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("degenerate tomography scheme (condition number {condition:.3e}); deficient directions: {directions}")]
    DegenerateScheme { condition: f64, directions: String },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("inconsistent acquisition: {0}")]
    InconsistentAcquisition(String),

    #[error("visibility undefined for an all-zero fringe")]
    UndefinedVisibility,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
