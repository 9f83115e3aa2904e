use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point is outside the closure of the domain (distance {distance:e})")]
    OutOfDomain { distance: f64 },

    #[error("unsupported set descriptor: {0}")]
    UnsupportedSet(String),

    #[error("inner solve did not converge: {0}")]
    InnerSolve(String),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid graph sample {index}: resolvent identity violated by {violation:e}")]
    InvalidSample { index: usize, violation: f64 },

    #[error("selection failed at t = {t}: {reason}")]
    Selection { t: f64, reason: String },

    #[error(transparent)]
    NonConvergence(Box<NonConvergence>),
}

/// Diagnostics carried out of a failed nonlinear solve.
#[derive(Debug, Clone)]
pub struct NonConvergence {
    pub lambda: f64,
    pub reason: String,
    /// Best iterate seen, flattened node-major (`n + 1` blocks of `N` values).
    pub best_iterate: Vec<f64>,
    pub best_residual: f64,
    pub residual_history: Vec<f64>,
    /// Continuation steps completed before the failure, as `(lambda, iterations, residual)`.
    pub completed_steps: Vec<(f64, usize, f64)>,
}

impl std::fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no convergence at lambda = {:e} ({}); best residual {:e} after {} recorded iterations",
            self.lambda,
            self.reason,
            self.best_residual,
            self.residual_history.len()
        )
    }
}

impl std::error::Error for NonConvergence {}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, actual })
        }
    }
}
