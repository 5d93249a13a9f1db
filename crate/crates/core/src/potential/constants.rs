//! Model constants derived from the mean-zero ensemble.
//!
//! With the even normalization (zero tilt at mean zero):
//!
//! * `alpha = d upsilon / d sigma |_0 = 1 / E^0[phi^2]`, strictly positive;
//! * `beta = beta_2 alpha^2` (only the quadratic part of the drift
//!   nonlinearity contributes);
//! * `lambda = beta / alpha`;
//! * `R_lambda = lambda^3 E^0[U'[phi] phi^3] / 12 - beta_2 lambda^2 / 6`,
//!   the exponential-growth renormalization of the Cole-Hopf field.

use serde::Serialize;

use super::{tilt_for_mean, PotentialError, PotentialSpec};
use crate::scalar::Scalar;

/// Constants of the scaled model, all derived from the potential and the
/// drift coefficients `beta_2 .. beta_deg`.
#[derive(Debug, Clone, Serialize)]
pub struct ModelConstants<T> {
    pub alpha: T,
    pub beta: T,
    pub lambda: T,
    pub r_lambda: T,
    /// Drift coefficients; index 0 is `beta_2`.
    pub betas: Vec<T>,
    /// Degree of the drift nonlinearity (2 when only `beta_2` is given).
    pub deg: usize,
}

impl<T: Scalar> ModelConstants<T> {
    pub fn beta2(&self) -> T {
        self.betas[0]
    }

    /// Coefficient `beta_d` for `d = 2..=deg`.
    pub fn beta_d(&self, d: usize) -> T {
        self.betas[d - 2]
    }

    /// Parabolic speed `c_N = N^2 alpha + N lambda^2 / 2` of the linearized
    /// evolution; also the step-size control constant.
    pub fn c_n(&self, n: u32) -> T {
        let nf = T::of(f64::from(n));
        nf * nf * self.alpha + nf * self.lambda * self.lambda * T::of(0.5)
    }
}

/// Compute the model constants and cross-check `alpha` against a centered
/// finite difference of the tilt map `sigma -> upsilon_sigma`.
pub fn compute_constants<T: Scalar>(
    spec: &PotentialSpec<T>,
    betas: &[T],
) -> Result<ModelConstants<T>, PotentialError> {
    if betas.is_empty() {
        return Err(PotentialError::BadParameter(
            "need at least beta_2".into(),
        ));
    }
    let ens0 = tilt_for_mean(spec, T::zero())?;
    let var0 = ens0.phi_moment(2);
    if var0 <= T::zero() {
        return Err(PotentialError::InternalConsistency(
            "nonpositive variance at sigma = 0".into(),
        ));
    }
    let alpha = var0.recip();

    // Cross-check: alpha is also the sigma-derivative of the tilt at 0. The
    // step and tolerance are f64-calibrated (1e-4, 1e-6) and widen with the
    // scalar's precision.
    let h = T::of(1e-4).max(T::epsilon().sqrt());
    let up = tilt_for_mean(spec, h)?.upsilon();
    let dn = tilt_for_mean(spec, -h)?.upsilon();
    let alpha_fd = (up - dn) / (h + h);
    if (alpha - alpha_fd).abs() > T::of(1e-6).max(T::epsilon() * T::of(3e5)) {
        return Err(PotentialError::InternalConsistency(format!(
            "alpha mismatch: 1/E[phi^2] = {} vs tilt finite difference {}",
            alpha.as_f64(),
            alpha_fd.as_f64()
        )));
    }

    let beta2 = betas[0];
    let beta = beta2 * alpha * alpha;
    if beta2 != T::zero() && beta == T::zero() {
        return Err(PotentialError::InternalConsistency(
            "beta vanished although beta_2 is nonzero".into(),
        ));
    }
    let lambda = beta / alpha;
    let u_phi3 = ens0.site_moment(3, 1)?;
    let twelfth = T::of(1.0 / 12.0);
    let sixth = T::of(1.0 / 6.0);
    let r_lambda = twelfth * lambda.powi(3) * u_phi3 - sixth * beta2 * lambda * lambda;
    Ok(ModelConstants {
        alpha,
        beta,
        lambda,
        r_lambda,
        betas: betas.to_vec(),
        deg: betas.len() + 1,
    })
}
