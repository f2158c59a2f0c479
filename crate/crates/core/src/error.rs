use thiserror::Error;

/// Errors raised by the engine. Messages are prefixed with the module that
/// produced them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Operands live over different variable tables, or a shape mismatch.
    #[error("ring: structural error: {0}")]
    Structural(String),
    /// A precondition on constant terms, invertibility or sign failed.
    #[error("{module}: domain error: {msg}")]
    Domain { module: &'static str, msg: String },
    /// An operator exponential was requested without a termination certificate.
    #[error("opcalc: no termination certificate: {0}")]
    Termination(String),
    /// An exact linear system had no unique solution.
    #[error("symfun: singular system: {0}")]
    Singular(String),
    /// A verification found a mismatch that must never happen.
    #[error("{module}: check failed: {msg}")]
    Check { module: &'static str, msg: String },
    /// Requested caps exceed the documented feasibility budget.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn check(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Check {
            module,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
