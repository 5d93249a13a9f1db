//! Multiplicative-noise lattice heat equation
//! `dQ = c_N Delta Q dt + sqrt(2) lambda N^{1/2} Q dB`.
//!
//! Integrated by Strang splitting: exact spectral heat half-steps around a
//! per-site geometric noise update
//!
//! ```text
//!   Q <- Q exp(sqrt(2) lambda N^{1/2} dB - lambda^2 N dt),
//! ```
//!
//! whose Ito compensator makes the update mean-one, so the expectation of the
//! field evolves by pure heat flow regardless of the noise realization
//! source. Positivity of nonnegative data is automatic.

use super::heat::{heat_kernel, HeatKernel};
use super::KernelError;
use crate::lattice::NoiseSource;
use crate::potential::ModelConstants;
use crate::scalar::Scalar;

/// State of the multiplicative-noise field.
#[derive(Debug, Clone)]
pub struct SheState<T> {
    pub t: T,
    pub q: Vec<T>,
}

/// Run `steps` steps of size `dt` from `data`, drawing increments from
/// `source` (shared with the lattice dynamics when coupling is requested).
/// `observe` is called after every step with the boundary-time state.
pub fn she_run<T: Scalar>(
    data: &[T],
    constants: &ModelConstants<T>,
    n: u32,
    dt: T,
    steps: usize,
    source: &mut dyn NoiseSource<T>,
    mut observe: impl FnMut(&SheState<T>),
) -> Result<SheState<T>, KernelError> {
    if data.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(KernelError::NegativeData);
    }
    let m = data.len();
    let half: HeatKernel<T> = heat_kernel(constants, n, m, T::zero(), dt * T::of(0.5))?;
    let nf = T::of(f64::from(n));
    let lambda = constants.lambda;
    let noise_scale = T::of(2.0).sqrt() * lambda * nf.sqrt();
    let compensator = lambda * lambda * nf * dt;
    let mut state = SheState {
        t: T::zero(),
        q: data.to_vec(),
    };
    let mut buf = vec![T::zero(); m];
    for _ in 0..steps {
        state.q = half.apply(&state.q)?;
        source.fill(&mut buf)?;
        for (q, &db) in state.q.iter_mut().zip(&buf) {
            *q = *q * (noise_scale * db - compensator).exp();
        }
        state.q = half.apply(&state.q)?;
        state.t = state.t + dt;
        observe(&state);
    }
    Ok(state)
}
