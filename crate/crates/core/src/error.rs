use thiserror::Error;

/// Errors raised by the matroid library and the solver machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or out-of-range input (bad element ids, bad files, non-bases).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A caller broke an operation's precondition.
    #[error("contract violated: {0}")]
    Contract(String),
    /// A bound or existence statement that must hold did not. Always a bug
    /// (or an inconsistent independence oracle), never a normal outcome.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    /// A certificate was computed against an older family snapshot.
    #[error("stale certificate: computed at family version {computed}, family is at {current}")]
    StaleCertificate { computed: u64, current: u64 },
    /// A brute-force oracle refused a request larger than its budget.
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! contract {
    ($($arg:tt)*) => { $crate::error::Error::Contract(format!($($arg)*)) };
}

macro_rules! violation {
    ($($arg:tt)*) => { $crate::error::Error::TheoremViolation(format!($($arg)*)) };
}

pub(crate) use contract;
pub(crate) use violation;
