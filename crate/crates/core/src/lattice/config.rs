//! Simulation configuration and step-size control.

use serde::{Deserialize, Serialize};

use super::LatticeError;
use crate::potential::{ModelConstants, PotentialSpec};
use crate::scalar::Scalar;

/// Configuration of one ring simulation.
///
/// The time step is slaved to the parabolic speed: `dt = theta / (4 Lambda
/// c_N)` with `c_N = N^2 alpha + N lambda^2 / 2`, which keeps the explicit
/// scheme safely inside its stability region for `theta <= 1/4`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    /// Scaling parameter (integer >= 4).
    pub n: u32,
    /// Ring size in sites (even, >= 4 deg).
    pub m: usize,
    /// Time-step safety factor in (0, 1/4].
    pub theta: f64,
    /// Physical horizon.
    pub horizon: f64,
    /// Base RNG seed.
    pub seed: u64,
    /// Steps between observer calls.
    pub observer_stride: usize,
    /// Steps between history snapshots.
    pub history_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 16,
            m: 128,
            theta: 0.05,
            horizon: 0.05,
            seed: 0,
            observer_stride: 16,
            history_stride: 16,
        }
    }
}

impl SimConfig {
    /// Time step `theta / (4 Lambda c_N)`.
    pub fn dt<T: Scalar>(&self, spec: &PotentialSpec<T>, constants: &ModelConstants<T>) -> T {
        T::of(self.theta) / (T::of(4.0) * spec.lambda_bound() * constants.c_n(self.n))
    }

    /// Number of steps to cover the horizon (at least one for positive
    /// horizons).
    pub fn steps<T: Scalar>(&self, spec: &PotentialSpec<T>, constants: &ModelConstants<T>) -> usize {
        if self.horizon <= 0.0 {
            return 0;
        }
        let dt = self.dt(spec, constants).as_f64();
        (self.horizon / dt).round().max(1.0) as usize
    }

    /// Validate against the model: ring size, parity, stability factor, and
    /// the widest local-function window in play.
    pub fn validate<T: Scalar>(
        &self,
        constants: &ModelConstants<T>,
        max_window_width: usize,
    ) -> Result<(), LatticeError> {
        if self.n < 4 {
            return Err(LatticeError::BadConfig(format!(
                "scaling parameter N must be >= 4, got {}",
                self.n
            )));
        }
        if self.m % 2 != 0 || self.m < 4 * constants.deg {
            return Err(LatticeError::BadConfig(format!(
                "ring size {} must be even and >= 4 deg = {}",
                self.m,
                4 * constants.deg
            )));
        }
        if self.m <= 2 * max_window_width {
            return Err(LatticeError::BadConfig(format!(
                "ring size {} must exceed twice the widest window ({})",
                self.m, max_window_width
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 0.25) {
            return Err(LatticeError::BadConfig(format!(
                "stability factor theta = {} outside (0, 0.25]",
                self.theta
            )));
        }
        Ok(())
    }
}
