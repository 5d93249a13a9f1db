//! Explicit integration of the interface gradient dynamics on a periodic ring.
//!
//! The state is the gradient field `phi` on `M` sites plus the height at the
//! origin. One Euler-Maruyama step with shared Gaussian increments
//! `dB_x ~ N(0, dt)`:
//!
//! ```text
//!   phi_x += [ N^2 (U'[phi_{x+1}] + U'[phi_{x-1}] - 2 U'[phi_x])
//!              + N^{3/2} Ftilde[tau_x phi] ] dt
//!              + sqrt(2) N (dB_x - dB_{x-1})
//!   j_0   += [ N^{3/2} (U'[phi_1] - U'[phi_0]) + N F[tau_0 phi] ] dt
//!              + sqrt(2) N^{1/2} dB_0
//! ```
//!
//! Both drift and noise telescope around the ring, so `sum_x phi_x` is
//! conserved exactly; heights away from the origin are reconstructed from
//! prefix sums of `phi`. The grand-canonical product measure is invariant for
//! the continuous-time dynamics, ring included.

mod config;
mod history;
mod integrator;
mod nonlinearity;
mod state;

pub use config::SimConfig;
pub use history::{History, Slice};
pub use integrator::{
    drift, run, step, step_with_noise, CoarseTape, FreshNoise, NoiseSource, NoiseTape,
    RecordingNoise,
};
pub use nonlinearity::{eval_nonlinearity, f_at, f_tilde_at};
pub use state::{height_field, init_equilibrium, FieldState};

use thiserror::Error;

/// Errors from the lattice layer.
#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("window of length {len} does not cover [-deg, deg] = [-{deg}, {deg}] around center {center}")]
    InsufficientWindow {
        len: usize,
        center: usize,
        deg: usize,
    },
    #[error("non-finite drift at site {site} (t = {t})")]
    Instability { site: usize, t: f64 },
    #[error("field blow-up at t = {t}: |phi[{site}]| = {value:e} exceeds {threshold:e} (min {min:e}, max {max:e})")]
    BlowUp {
        t: f64,
        site: usize,
        value: f64,
        threshold: f64,
        min: f64,
        max: f64,
    },
    #[error("noise tape exhausted at step {step} (tape holds {steps} steps)")]
    TapeExhausted { step: usize, steps: usize },
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
}
