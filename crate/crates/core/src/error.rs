use thiserror::Error;

/// Errors raised anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no bounded trajectory found after {attempts} initial conditions")]
    Divergence { attempts: usize },

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("series too short: need at least {needed} values, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Format(err.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Format(err.to_string())
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
