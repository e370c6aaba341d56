use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("Newton iteration failed to converge for zero #{index} of J_{order}")]
    ZeroNotConverged { order: u32, index: usize },

    #[error("oracle refinement did not converge: {0}")]
    OracleNotConverged(String),

    #[error("max order {max_order} aliases on an angular grid of {count} samples (need max order < {half})", half = count / 2)]
    Aliasing { max_order: usize, count: usize },

    #[error("synthesis is not real: imaginary residue {0:e}")]
    NonRealSynthesis(f64),

    #[error("sigma = {sigma} lies within {margin} of the Bessel zero {zero} of J_{order}")]
    Exclusion {
        order: i32,
        sigma: f64,
        zero: f64,
        margin: f64,
    },

    #[error("invalid phantom: {0}")]
    Phantom(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
