use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("integrand returned a non-finite value {value} at x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("value overflows f64: ln|x| = {0}")]
    Overflow(f64),

    #[error("variance integral is negative ({value:e}) beyond its error estimate ({error:e})")]
    NegativeVariance { value: f64, error: f64 },

    #[error("invalid simulation setup: {0}")]
    Simulation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { func, detail: detail.into() }
}
