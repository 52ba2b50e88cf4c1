use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("parameter {param} = {value} out of range: expected {expected}")]
    Parameter {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("p = {p} must satisfy 1 <= p <= n-1 for n = {n}")]
    MaxCount { p: usize, n: usize },

    #[error("infinite product did not converge after {terms_used} terms")]
    ProductNotConverged { terms_used: usize },

    #[error("conditional distribution is not monotone at u = {u}")]
    NonMonotoneConditional { u: f64 },

    #[error("no conditional mass near (u1, u2) = ({u1}, {u2}) after {retries} retries")]
    ZeroConditionalMass { u1: f64, u2: f64, retries: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
}

/// Checks that `x` lies in the closed unit interval.
pub(crate) fn unit(what: &'static str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::Domain { what, value: x })
    }
}
