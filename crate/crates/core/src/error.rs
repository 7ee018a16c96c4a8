use thiserror::Error;

/// Errors raised by the qcov core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid too coarse: {0}")]
    DegenerateGrid(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("missing or mismatched beta series: {0}")]
    MissingBeta(String),

    #[error("insufficient data: {usable} usable points, {required} required")]
    InsufficientData { usable: usize, required: usize },

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {value}")))
    }
}
