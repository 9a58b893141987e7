use thiserror::Error;

/// Validation and runtime failures across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },

    #[error("horizon must be non-negative, got {0}")]
    NegativeHorizon(f64),

    #[error("step count must be at least 1")]
    ZeroSteps,

    #[error("sample count must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("times must be positive and strictly increasing")]
    UnorderedTimes,

    #[error("strike grid must be positive and strictly decreasing")]
    UnorderedGrid,

    #[error("time {0} does not fall on the simulation grid")]
    OffGrid(f64),

    #[error("drift {0} was not simulated in this sample")]
    MissingDrift(f64),

    #[error("the identity route is only available for drift 0, got {0}")]
    UnsupportedDrift(f64),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NotFinite { name, value })
    }
}

pub(crate) fn min_samples(got: usize, min: usize) -> Result<usize> {
    if got >= min {
        Ok(got)
    } else {
        Err(Error::TooFewSamples { min, got })
    }
}
