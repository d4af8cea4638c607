use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("site {site} lies outside window [{lo}, {hi}]")]
    OutOfWindow { site: i64, lo: i64, hi: i64 },

    #[error("inverse iteration failed to converge near E = {energy}; cluster {cluster:?}")]
    NoConvergence { energy: f64, cluster: Vec<f64> },

    #[error("resonance hypothesis violated: |sin| = {sine:e} exceeds {threshold:e}")]
    HypothesisViolated { sine: f64, threshold: f64 },

    #[error("not enough usable points: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("record decoding failed: {0}")]
    Record(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
