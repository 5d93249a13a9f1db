//! Jet moments: sigma-derivatives of `E^sigma[f]` at `sigma = 0`.
//!
//! Computed by Richardson-extrapolated central differences of the tilted
//! moment map. A local function of jet order `k` has orders `0..=k` vanishing;
//! the estimates here come with explicit error bounds combining truncation
//! and quadrature noise.

use super::{ensemble_moment, tilt_for_mean, LocalFn, PotentialError, PotentialSpec};
use crate::scalar::Scalar;

/// One sigma-derivative estimate.
#[derive(Debug, Clone, Copy)]
pub struct JetMoment<T> {
    pub order: u8,
    pub value: T,
    pub error_bound: T,
}

/// Default finite-difference step in sigma.
pub const DEFAULT_SIGMA_STEP: f64 = 1e-3;

/// Quadrature noise floor entering the error bounds.
const QUAD_NOISE: f64 = 1e-11;

/// Estimate `d^l/d sigma^l E^sigma[f] |_{sigma=0}` for `l = 0..=max_order`.
///
/// `max_order <= 3`. Uses steps `h` and `h/2` with Richardson extrapolation;
/// the reported bound is the extrapolation discrepancy plus the amplified
/// quadrature noise `eps / h^l`.
pub fn jet_moments<T: Scalar>(
    spec: &PotentialSpec<T>,
    f: &LocalFn<T>,
    max_order: u8,
) -> Result<Vec<JetMoment<T>>, PotentialError> {
    jet_moments_with_step(spec, f, max_order, T::of(DEFAULT_SIGMA_STEP))
}

pub fn jet_moments_with_step<T: Scalar>(
    spec: &PotentialSpec<T>,
    f: &LocalFn<T>,
    max_order: u8,
    h: T,
) -> Result<Vec<JetMoment<T>>, PotentialError> {
    assert!(max_order <= 3, "jet moments support orders 0..=3");
    let half = T::of(0.5);
    // moment at sigma for the stencil
    let m = |sigma: T| -> Result<T, PotentialError> {
        let ens = tilt_for_mean(spec, sigma)?;
        ensemble_moment(&ens, f)
    };
    let m0 = m(T::zero())?;
    let mut out = vec![JetMoment {
        order: 0,
        value: m0,
        error_bound: T::of(QUAD_NOISE),
    }];
    if max_order == 0 {
        return Ok(out);
    }
    let hh = h * half;
    let m_p1 = m(h)?;
    let m_m1 = m(-h)?;
    let m_p2 = m(h + h)?;
    let m_m2 = m(-h - h)?;
    let m_ph = m(hh)?;
    let m_mh = m(-hh)?;
    let eps = T::of(QUAD_NOISE);

    // first derivative
    {
        let d_h = (m_p1 - m_m1) / (h + h);
        let d_h2 = (m_ph - m_mh) / h;
        let value = (T::of(4.0) * d_h2 - d_h) / T::of(3.0);
        let error_bound = (value - d_h2).abs() + eps / h;
        out.push(JetMoment {
            order: 1,
            value,
            error_bound,
        });
    }
    if max_order >= 2 {
        let h2 = h * h;
        let s_h = (m_p1 - m0 - m0 + m_m1) / h2;
        let s_h2 = (m_ph - m0 - m0 + m_mh) / (h2 * T::of(0.25));
        let value = (T::of(4.0) * s_h2 - s_h) / T::of(3.0);
        let error_bound = (value - s_h2).abs() + eps / h2;
        out.push(JetMoment {
            order: 2,
            value,
            error_bound,
        });
    }
    if max_order >= 3 {
        let h3 = h * h * h;
        // third central difference with steps h and h/2
        let t_h = (m_p2 - (m_p1 + m_p1) + (m_m1 + m_m1) - m_m2) / (h3 + h3);
        let t_h2 = (m_p1 - (m_ph + m_ph) + (m_mh + m_mh) - m_m1) / (h3 * T::of(0.25));
        let value = (T::of(4.0) * t_h2 - t_h) / T::of(3.0);
        let error_bound = (value - t_h2).abs() + eps / h3;
        out.push(JetMoment {
            order: 3,
            value,
            error_bound,
        });
    }
    Ok(out)
}
