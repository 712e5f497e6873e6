use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} did not converge (estimate {estimate:e}, error {error:e})")]
    NoConvergence {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    /// The fixed-point equation has no root below the first local maximum:
    /// the requested load lies outside the stable operating regime.
    #[error("no stable operating point: arrival rate {a} exceeds the attainable maximum {peak}")]
    NoStableSolution { a: f64, peak: f64 },

    /// Service rate does not exceed the arrival rate.
    #[error("unstable operating point: arrival rate {load} >= service rate {service}")]
    Unstable { load: f64, service: f64 },

    #[error("at least {needed} replications are required, got {got}")]
    InsufficientRuns { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
