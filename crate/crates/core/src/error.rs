use thiserror::Error;

/// Failure modes of the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Sizes, counts or configuration values are inconsistent.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An adaptive scheme exhausted its budget before meeting its tolerance.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// Inputs that were supposed to certify each other do not.
    #[error("consistency error: {0}")]
    Consistency(String),
    /// An iterative solver hit its iteration cap or a singular system.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
macro_rules! param {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(format!($($arg)*)) };
}
pub(crate) use domain;
pub(crate) use param;
