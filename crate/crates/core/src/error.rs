use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical method failed (no convergence, singular matrix, underflow).
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: &'static str, detail: String },

    /// A construction that is well-formed but not admissible, such as a
    /// Savage-Dickey ratio built from a local prior.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The value is not defined at this point (e.g. a kernel density estimate
    /// evaluated outside the range of its sample).
    #[error("undefined at {at:?}: {reason}")]
    Undefined { at: Vec<f64>, reason: &'static str },

    #[error("at theta0 = {at:?}: {inner}")]
    AtPoint { at: Vec<f64>, inner: Box<Error> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            detail: detail.into(),
        }
    }

    /// Attach the grid point at which an evaluation failed.
    pub fn at(self, theta0: &[f64]) -> Self {
        match self {
            e @ (Error::AtPoint { .. } | Error::Undefined { .. }) => e,
            e => Error::AtPoint {
                at: theta0.to_vec(),
                inner: Box::new(e),
            },
        }
    }

    /// True for failures that mean "no value here" rather than "broken".
    pub fn is_undefined(&self) -> bool {
        match self {
            Error::Undefined { .. } => true,
            Error::AtPoint { inner, .. } => inner.is_undefined(),
            _ => false,
        }
    }

    /// Innermost error, with any location wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { inner, .. } => inner.root(),
            e => e,
        }
    }
}
