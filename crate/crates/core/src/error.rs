use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The relay buffer can never drain (P_SA^I = 0), so no stationary
    /// distribution of the finite chain exists in the intended sense.
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    /// Two records that must describe the same uplink disagree.
    #[error("inconsistent scenario: {0}")]
    Inconsistent(String),

    /// Configuration problem, tagged with the dotted path of the field.
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input (config file, parameters).
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

/// Rejects NaN/inf and values outside `[lo, hi)`.
pub(crate) fn check_prob_open(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::invalid(name, format!("{v} is not in [0, 1)")));
    }
    Ok(())
}

pub(crate) fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(name, format!("{v} is not in [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(name, format!("{v} must be finite and > 0")));
    }
    Ok(())
}

pub(crate) fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
    }
    Ok(())
}
