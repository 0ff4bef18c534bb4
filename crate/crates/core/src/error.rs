use alloc::boxed::Box;
use alloc::string::String;

use crate::em::FitResult;

pub type Result<T> = core::result::Result<T, FrailtyError>;

#[derive(Debug, thiserror::Error)]
pub enum FrailtyError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("quadrature did not converge after {subdivisions} subdivisions (value {value}, error estimate {err_est})")]
    Quadrature {
        value: f64,
        err_est: f64,
        subdivisions: usize,
    },

    #[error("{what} did not converge in {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("singular Hessian in {what} (degenerate design or monotone likelihood)")]
    SingularHessian { what: &'static str },

    #[error("information matrix is not positive definite (smallest eigenvalue {eigenvalue})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("time {time} is not a jump point of the step baseline")]
    NotJumpPoint { time: f64 },

    #[error("time {time} lies beyond the last baseline jump {last}")]
    Extrapolation { time: f64, last: f64 },

    #[error("no Weibull shape reproduces squared coefficient of variation {cv2}")]
    NoWeibullSolution { cv2: f64 },

    #[error("baseline survival never drops to 0.5 (minimum {min_survival})")]
    NoMedianCrossing { min_survival: f64 },

    #[error("EM did not converge in {iterations} iterations")]
    EmMaxIter { iterations: usize, partial: Box<FitResult> },

    #[error("{failed} of {total} replicates failed")]
    TooManyFailures { failed: usize, total: usize },
}

impl FrailtyError {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        FrailtyError::Domain { what, value }
    }

    /// True for the failure modes that count as "did not converge" at the
    /// command line (as opposed to bad inputs).
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            FrailtyError::Quadrature { .. }
                | FrailtyError::NonConvergence { .. }
                | FrailtyError::SingularHessian { .. }
                | FrailtyError::NotPositiveDefinite { .. }
                | FrailtyError::EmMaxIter { .. }
                | FrailtyError::TooManyFailures { .. }
        )
    }
}
