use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hermitian symmetry violated: {0}")]
    SymmetryViolation(String),

    #[error("non-finite coefficient after step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
