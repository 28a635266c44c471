use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("age {age} outside [0, {horizon}]")]
    AgeOutOfRange { age: f64, horizon: f64 },

    #[error("negative total population {0}")]
    NegativeDensity(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("parse error in `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("non-finite or runaway value {value} at t = {t}")]
    BlowUp { t: f64, value: f64 },

    #[error("negative density {value} at t = {t} (below round-off floor)")]
    Negative { t: f64, value: f64 },

    #[error("age truncation lost mass {discarded:e} at t = {t}, allowed {allowed:e}")]
    TailMass { t: f64, discarded: f64, allowed: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("characteristic seam a = t has no defined value (a = {0})")]
    Seam(f64),

    #[error("precondition not met: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::Negative { .. }
                | Error::TailMass { .. }
                | Error::NoConvergence { .. }
                | Error::Bracket(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
