//! Shared numerics: adaptive quadrature and small-sample statistics.

pub mod quad;
pub mod stats;

use thiserror::Error;

/// Errors from the numerics layer.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("quadrature failed to converge: requested {requested:e}, achieved {achieved:e} after {evals} evaluations")]
    QuadratureNonConvergence {
        requested: f64,
        achieved: f64,
        evals: usize,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("empty sample in {0}")]
    EmptySample(&'static str),
}
