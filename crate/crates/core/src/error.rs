use thiserror::Error;

/// Errors produced by model construction, analysis and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space of {required} states exceeds the cap of {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("unknown chain family `{0}`")]
    UnknownFamily(String),

    #[error("kernel is not symmetric: |K(x,y) - K(y,x)| = {0:e}")]
    Asymmetric(f64),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
