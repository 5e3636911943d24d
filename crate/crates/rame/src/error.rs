//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A NaN or infinity reached an API boundary.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// A hyperparameter or run setting violates its contract.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The convergence-certificate hypotheses cannot be met; names the
    /// violated bound.
    #[error("certification infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
