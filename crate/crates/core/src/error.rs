use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precision exceeded: {0}")]
    PrecisionExceeded(String),
    #[error("a point-mass law has no density")]
    NoDensity,
    #[error("operation requires a non-degenerate spectrum")]
    RequiresNonDegenerate,
    #[error("{what} = {value} exceeds the supported maximum {max}")]
    TooLarge {
        what: &'static str,
        value: usize,
        max: usize,
    },
    #[error("the law is a point mass (constant spectrum)")]
    DegenerateLaw,
    #[error("i/o error: {0}")]
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

pub type Result<T> = std::result::Result<T, Error>;
