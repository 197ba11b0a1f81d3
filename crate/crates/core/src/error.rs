use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range input (bad sizes, sites, matrix shapes).
    #[error("argument error: {0}")]
    Argument(String),

    /// Input outside the domain of a special function (non-finite values).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called outside its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative routine ran out of iterations.
    #[error("no convergence after {iterations} iterations (worst residual {worst_residual:e}){}", index.map(|i| format!(" at root {i}")).unwrap_or_default())]
    Convergence { iterations: usize, worst_residual: f64, index: Option<usize> },

    /// Both closed-form branches vanish, so no eigenvector can be built.
    #[error("pole in closed-form construction: {0}")]
    Pole(String),

    /// A closed curve passes through the base point of a winding computation.
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    /// Zero total weight where a normalized quantity was requested.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// Amplitudes left the representable range.
    #[error("amplitude overflow after {step} steps; raise the precision or reduce the step count")]
    Overflow { step: usize },

    /// Serialization or parsing failure of an external format.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Attach a root index to a convergence error, leave others untouched.
    pub fn with_index(self, i: usize) -> Self {
        match self {
            Error::Convergence { iterations, worst_residual, .. } => Error::Convergence { iterations, worst_residual, index: Some(i) },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
