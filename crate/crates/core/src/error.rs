use alloc::string::String;

/// Errors raised by the estimators and sketch constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("lag {lag} has no contributing pairs")]
    InvalidLag { lag: usize },

    #[error("need at least {required} valid lags, found {found}")]
    TooFewValidLags { required: usize, found: usize },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:e})")]
    Asymmetric(f64),

    #[error("sample set is empty")]
    EmptySample,

    #[error("pulses overlap: supports [{0}, {1}] and [{2}, {3}] intersect")]
    OverlappingPulses(f64, f64, f64, f64),

    #[error("spectrum has an imaginary residue of {0:e} relative to its peak")]
    NonRealSpectrum(f64),

    #[error("data source: {0}")]
    Source(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
