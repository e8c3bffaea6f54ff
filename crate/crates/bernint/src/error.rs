//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function id that is not in the catalog.
    #[error("unknown function: {0:?}")]
    UnknownFunction(String),

    /// A derivative order beyond the function's smoothness class.
    #[error("smoothness error: derivative of order {requested} requested, function is C^{max}")]
    Smoothness { requested: u32, max: u32 },

    /// Derivative order exceeds the operator degree.
    #[error("degree error: derivative order s={s} requires n >= s, got n={n}")]
    Degree { n: u32, s: u32 },

    /// In high-precision mode a value sits too close to a half-integer to
    /// decide the rounding tie reliably.
    #[error("ambiguous tie: value within {guard} of a half-integer at k={k} (n={n})")]
    AmbiguousTie { n: u32, k: u32, guard: String },

    /// A theorem's hypotheses do not hold for the given function/order.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }
}
