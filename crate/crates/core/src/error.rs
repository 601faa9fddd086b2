use thiserror::Error;

/// Errors raised by law evaluation, samplers and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series for {what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("argument outside the admissible domain: {0}")]
    DomainError(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    #[error("grid too coarse: need at least 3 points up to index {at_index}")]
    GridTooCoarse { at_index: usize },

    #[error("grid is not uniform")]
    NonUniformGrid,

    #[error("inverse subordinator did not cross level {level} within {max_steps} steps")]
    HorizonOverflow { level: f64, max_steps: usize },

    #[error("bin pooling left {bins} bin(s); need at least 2")]
    DegenerateBins { bins: usize },
}

impl Error {
    /// True for failures of the numerical machinery itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::HorizonOverflow { .. } | Error::DegenerateBins { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
