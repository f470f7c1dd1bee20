//! Error taxonomy shared by the whole crate.
//!
//! Four classes matter to callers: usage errors (bad arguments, mismatched
//! dimensions), domain errors (inputs outside the validity region of a
//! method, e.g. a vanishing frequency), numeric failures (step underflow,
//! singular Jacobians, quadrature non-convergence) and cost-guard refusals.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched dimensions or otherwise invalid arguments.
    #[error("usage: {0}")]
    Usage(String),

    /// Input lies outside the domain a method is valid on.
    #[error("domain: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numeric: {0}")]
    Numeric(String),

    /// Refused to run a computation whose cost grows without bound
    /// (stiff reference solves at tiny epsilon). Override explicitly.
    #[error("cost guard: {0}")]
    CostGuard(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Check that two dimensions agree, with a short context tag.
pub fn check_dim(context: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Usage(format!(
            "{context}: dimension mismatch, expected {expected}, got {got}"
        )));
    }
    Ok(())
}
