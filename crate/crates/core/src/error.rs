use thiserror::Error;

use crate::calibration::Membership;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Exact enumeration was requested above the supported size.
    #[error("capacity exceeded: {what} = {size} exceeds the limit of {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally malformed input (shape mismatch, non-finite values, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Calibration target is not in the interior of the marginal polytope.
    #[error("target marginals are {status} the marginal polytope; violated direction: {violated}")]
    NotInterior {
        status: Membership,
        violated: String,
    },

    #[error("iteration budget of {iterations} exhausted with residual {residual:e}")]
    Budget { iterations: usize, residual: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracket {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    /// Target value lies outside what the model can attain.
    #[error("target {target} outside attainable range [{lo}, {hi}]")]
    Range { target: f64, lo: f64, hi: f64 },

    #[error("degenerate tranche: {0}")]
    DegenerateTranche(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
