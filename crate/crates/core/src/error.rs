use alloc::string::String;

use crate::market::YearMonth;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("month {missing} is missing from the series")]
    Continuity { missing: YearMonth },

    #[error("duplicate or out-of-order month {0}")]
    DuplicateMonth(YearMonth),

    #[error("invalid record at {date}: {reason}")]
    InvalidRecord {
        date: YearMonth,
        reason: &'static str,
    },

    #[error("{what} is out of range")]
    OutOfRange { what: String },

    #[error("insufficient data for {what}: need {needed}, have {available}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("length mismatch: {what} (expected {expected}, found {found})")]
    Alignment {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("design matrix is rank deficient")]
    Singular,

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("degenerate spectrum (lambda+ == lambda-); perturb kappa away from (1-gamma)^2/4")]
    DegenerateSpectrum,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Continuity { .. }
            | Error::DuplicateMonth(_)
            | Error::InvalidRecord { .. }
            | Error::OutOfRange { .. }
            | Error::InsufficientData { .. }
            | Error::Alignment { .. }
            | Error::NonFinite(_) => ErrorKind::Data,
            Error::Singular | Error::Constraint(_) | Error::DegenerateSpectrum => {
                ErrorKind::Numerical
            }
        }
    }

    pub(crate) fn out_of_range(what: impl Into<String>) -> Self {
        Error::OutOfRange { what: what.into() }
    }
}
