use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("integrand is not finite at node {node} (value {value})")]
    NonFinite { node: String, value: String },

    #[error("overflow converting log-scale value (logmag = {logmag})")]
    Overflow { logmag: f64 },

    #[error("syntax error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("symbol rejected by admissibility rule (g k_v must stay in some L^(p',m)): {0}")]
    Admissibility(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, FockError>;
