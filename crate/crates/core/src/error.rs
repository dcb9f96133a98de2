use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Parameters outside the documented domain of an operation.
    InvalidInput(String),
    /// A function that must be positive was not, at `t`.
    NonPositiveSample { t: f64, value: f64 },
    /// A structural hypothesis needed by the operation does not hold.
    ConditionFailed(String),
    /// The requested construction mode contradicts the integral verdict.
    ModeGuard(String),
    /// An exponential factor overflowed at `s`.
    Overflow { s: f64 },
    /// Quadrature, root finding or ODE integration failed.
    Numerical(String),
    /// No admissible parameter was found; carries the probe trace.
    NotFound(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::NonPositiveSample { t, value } => {
                write!(f, "non-positive sample {value:e} at t = {t:e}")
            }
            Error::ConditionFailed(m) => write!(f, "condition not satisfied: {m}"),
            Error::ModeGuard(m) => write!(f, "mode guard: {m}"),
            Error::Overflow { s } => {
                write!(f, "exponential overflow: exponent exceeds 700 at s = {s:e}")
            }
            Error::Numerical(m) => write!(f, "numerical failure: {m}"),
            Error::NotFound(m) => write!(f, "no admissible value: {m}"),
        }
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numerical(msg.into()))
}
