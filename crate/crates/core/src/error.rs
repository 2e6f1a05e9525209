use thiserror::Error;

use crate::solver::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, dimensions or potential weights.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix is not positive definite (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{what} did not converge within {iterations} iterations (last change {residual:.3e})")]
    IterationLimit {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("energy model returned a non-finite value at t = {t}, q = {q:?}")]
    Model { t: f64, q: Vec<f64> },

    #[error("Newton iteration failed at t = {t}: residual {residual:.3e}, last iterate {last:?}")]
    Newton { t: f64, residual: f64, last: Vec<f64> },

    #[error("step size fell below h_min = {h_min:.3e} at t = {t}")]
    StepUnderflow {
        t: f64,
        h_min: f64,
        partial: Box<Trajectory>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::IterationLimit { .. }
                | Error::Model { .. }
                | Error::Newton { .. }
                | Error::StepUnderflow { .. }
        )
    }
}
