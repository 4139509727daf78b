use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants split along the CLI exit-code contract: [`Error::Parse`],
/// [`Error::Io`], [`Error::Dimension`], [`Error::InvalidSimplex`] and
/// [`Error::InvalidParameter`] are input problems; everything else is
/// numeric.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid probability vector: {0}")]
    InvalidSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{func}: argument {value} outside domain {domain}")]
    Domain {
        func: String,
        value: f64,
        domain: String,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("enumeration cap exceeded: {0} decision rules")]
    EnumerationCap(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(func: impl Into<String>, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            func: func.into(),
            value,
            domain: domain.into(),
        }
    }

    /// True for errors caused by malformed input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Io(_)
                | Error::Dimension(_)
                | Error::InvalidSimplex(_)
                | Error::InvalidParameter(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
