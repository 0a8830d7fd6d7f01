use thiserror::Error;

/// Errors raised by samplers, root flows, eigensolvers and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A distribution or model parameter is outside its supported range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Arguments are individually valid but inconsistent with each other.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A function was evaluated outside its domain (e.g. `z` not above every root).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations on gap ({lo}, {hi})")]
    NonConvergence { lo: f64, hi: f64, iterations: usize },

    /// Floating point degeneracy (underflow, lost pairing, ...).
    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
