use thiserror::Error;

/// Errors surfaced by estimation, limit machinery, geometry and experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition (dimensions, ranges, rank, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A least-squares coordinate is numerically zero but carries a positive
    /// penalty, so the adaptive weight is undefined.
    #[error("degenerate pilot estimate: |beta_ls[{index}]| = {value:e} is below {threshold:e} while lambda[{index}] > 0")]
    DegeneratePilot {
        index: usize,
        value: f64,
        threshold: f64,
    },

    /// Coordinate descent exhausted its sweep budget before meeting the
    /// stationarity tolerance.
    #[error("solver did not converge within {sweeps} sweeps (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence {
        sweeps: usize,
        residual: f64,
        tolerance: f64,
    },

    /// The random shift landed exactly on the penalty singularity
    /// `phi_j + psi_j z_j = 0`, so the limit objective is undefined.
    #[error("limit objective undefined at coordinate {index}: phi + psi * z = 0 exactly")]
    UndefinedDenominator { index: usize },

    /// A requested point is not a member of the set it must belong to.
    #[error("point is not a member of the limit set: {0}")]
    NotAMember(String),

    /// Serialization or deserialization failed.
    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
