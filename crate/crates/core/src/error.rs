use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("vertex count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("n = {n} exceeds the enumeration cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("n = {n} is outside the supported range 1..={max}")]
    UnsupportedSize { n: usize, max: usize },

    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid prior specification: {0}")]
    InvalidPrior(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie strictly inside (0, 1)",
        })
    }
}
