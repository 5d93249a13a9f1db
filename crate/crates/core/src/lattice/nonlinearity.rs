//! The drift nonlinearity `F` and its discrete-gradient form `Ftilde`.
//!
//! `F` averages the quadratic product `U'U'` over its three one-step
//! translates and adds, for each degree `d >= 3`, the `d+1` translates of the
//! product of `d` consecutive `U'` factors:
//!
//! ```text
//!   F[phi]  = (beta_2 / 3) (u_1 u_2 + u_0 u_1 + u_{-1} u_0)
//!           + sum_{d=3}^{deg} beta_d sum_{k=0}^{d} prod_{l=1}^{d} u_{l-k},
//!   u_w = U'[phi_w].
//! ```
//!
//! `Ftilde[phi] = F[phi] - F[tau_{-1} phi]` telescopes to a two-term
//! difference, so the ring sum of `Ftilde` vanishes identically.

use super::LatticeError;
use crate::potential::ModelConstants;
use crate::scalar::{wrap, Scalar};

/// `F[tau_x phi]` from precomputed `u = U'[phi]` values on the ring.
pub fn f_at<T: Scalar>(u: &[T], x: i64, c: &ModelConstants<T>) -> T {
    let m = u.len();
    let at = |w: i64| u[wrap(x + w, m)];
    let third = T::of(1.0 / 3.0);
    let mut acc =
        third * c.beta2() * (at(1) * at(2) + at(0) * at(1) + at(-1) * at(0));
    for d in 3..=c.deg {
        let beta_d = c.beta_d(d);
        if beta_d == T::zero() {
            continue;
        }
        let mut windows = T::zero();
        for k in 0..=(d as i64) {
            let mut prod = T::one();
            for l in 1..=(d as i64) {
                prod = prod * at(l - k);
            }
            windows = windows + prod;
        }
        acc = acc + beta_d * windows;
    }
    acc
}

/// `Ftilde[tau_x phi] = F[tau_x phi] - F[tau_{x-1} phi]` in telescoped form.
pub fn f_tilde_at<T: Scalar>(u: &[T], x: i64, c: &ModelConstants<T>) -> T {
    let m = u.len();
    let at = |w: i64| u[wrap(x + w, m)];
    let third = T::of(1.0 / 3.0);
    let mut acc = third * c.beta2() * (at(1) * at(2) - at(-2) * at(-1));
    for d in 3..=c.deg {
        let beta_d = c.beta_d(d);
        if beta_d == T::zero() {
            continue;
        }
        let mut fwd = T::one();
        let mut bwd = T::one();
        for l in 1..=(d as i64) {
            fwd = fwd * at(l);
            bwd = bwd * at(-l);
        }
        acc = acc + beta_d * (fwd - bwd);
    }
    acc
}

/// Evaluate `(F, Ftilde)` on an explicit window around `center`.
///
/// The window must cover `[-deg, deg]` around the center site.
pub fn eval_nonlinearity<T: Scalar>(
    window: &[T],
    center: usize,
    spec: &crate::potential::PotentialSpec<T>,
    c: &ModelConstants<T>,
) -> Result<(T, T), LatticeError> {
    let deg = c.deg;
    if center < deg || center + deg >= window.len() {
        return Err(LatticeError::InsufficientWindow {
            len: window.len(),
            center,
            deg,
        });
    }
    let u: Vec<T> = window.iter().map(|&a| spec.u_prime(a)).collect();
    // a window slice is not a ring; emulate by a one-shot ring of the same
    // length with the center mapped to its absolute position
    Ok((
        f_at(&u, center as i64, c),
        f_tilde_at(&u, center as i64, c),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{compute_constants, PotentialSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn constants(betas: &[f64]) -> ModelConstants<f64> {
        compute_constants(&PotentialSpec::gaussian(), betas).unwrap()
    }

    #[test]
    fn quadratic_on_constant_field() {
        // gaussian U' = id, deg = 2, beta_2 = 1, phi = 1: F = (1+1+1)/3 = 1
        let c = constants(&[1.0]);
        let u = vec![1.0; 16];
        assert!((f_at(&u, 5, &c) - 1.0).abs() < 1e-15);
        // constant field: Ftilde = 0 by translation invariance
        assert!(f_tilde_at(&u, 5, &c).abs() < 1e-15);
    }

    #[test]
    fn window_form_matches_ring_form() {
        let spec = PotentialSpec::gaussian();
        let c = constants(&[1.0, 0.3]);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let phi: Vec<f64> = (0..9).map(|_| f64::std_normal(&mut rng)).collect();
        let (f, ft) = eval_nonlinearity(&phi, 4, &spec, &c).unwrap();
        let u: Vec<f64> = phi.iter().map(|&a| spec.u_prime(a)).collect();
        assert!((f - f_at(&u, 4, &c)).abs() < 1e-15);
        assert!((ft - f_tilde_at(&u, 4, &c)).abs() < 1e-15);
    }

    #[test]
    fn insufficient_window_is_an_error() {
        let spec = PotentialSpec::gaussian();
        let c = constants(&[1.0, 0.3]);
        let phi = vec![0.0; 5];
        assert!(matches!(
            eval_nonlinearity(&phi, 1, &spec, &c),
            Err(LatticeError::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn telescoped_form_equals_difference_of_translates() {
        let c = constants(&[0.7, 0.25]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..32).map(|_| f64::std_normal(&mut rng)).collect();
        for x in 0..32 {
            let direct = f_at(&u, x, &c) - f_at(&u, x - 1, &c);
            let tele = f_tilde_at(&u, x, &c);
            assert!((direct - tele).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn ring_sum_of_f_tilde_vanishes() {
        let c = constants(&[1.0, 0.3]);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let u: Vec<f64> = (0..64).map(|_| f64::std_normal(&mut rng)).collect();
        let total: f64 = (0..64).map(|x| f_tilde_at(&u, x, &c)).sum();
        assert!(total.abs() < 1e-12, "sum {total}");
    }
}
