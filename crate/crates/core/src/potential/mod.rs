//! Grand-canonical single-site ensembles for the interface model.
//!
//! A potential `U = U1 + U2` (uniformly convex part plus bounded perturbation)
//! defines the product measure with single-site density
//!
//! ```text
//!     Z(v)^{-1} exp(-U[a] + v a) da,
//! ```
//!
//! where the tilt `v` is chosen so the mean is a prescribed `sigma`. This
//! module computes partition values and moments by adaptive quadrature,
//! inverts the tilt-to-mean map, samples the measure by rejection, derives the
//! model constants (alpha, beta, lambda, R_lambda), and measures jets: the
//! orders to which `d^l/d sigma^l E^sigma f` vanishes at `sigma = 0`.

mod constants;
mod ensemble;
mod jets;
mod localfn;
mod spec;

pub use constants::{compute_constants, ModelConstants};
pub use ensemble::{partition_function, sample_ensemble, tilt_for_mean, Ensemble};
pub use jets::{jet_moments, JetMoment};
pub use localfn::{ensemble_moment, LocalFn, LocalFnKind, Orientation, PolyTerm, SiteFactor};
pub use spec::{eval_potential, PotentialFamily, PotentialSpec};

use thiserror::Error;

use crate::numerics::NumericsError;

/// Errors from the potential layer.
#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("non-finite input to potential evaluation: {0}")]
    NonFiniteInput(f64),
    #[error("potential parameter out of range: {0}")]
    BadParameter(String),
    #[error("target mean {sigma} exceeds configured cap {cap}")]
    MeanCapExceeded { sigma: f64, cap: f64 },
    #[error("tilt inversion did not converge for sigma = {sigma} (residual {residual:e})")]
    TiltNonConvergence { sigma: f64, residual: f64 },
    #[error("rejection sampler acceptance rate {rate:e} below 1e-3; envelope misconfigured")]
    SamplerAcceptance { rate: f64 },
    #[error("local function window [{lo}, {hi}] too wide for tensor quadrature (max width 8); use the Monte Carlo path")]
    WindowTooWide { lo: i64, hi: i64 },
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
