//! Compactly supported smooth averaging kernel on the ring.

use serde::Serialize;

use super::ColeHopfError;
use crate::scalar::{wrap, Scalar};

/// The standard bump `exp(-1/(1-u^2))` on `(-1, 1)`, rescaled to a support
/// radius of `ceil(N^{1-delta_S})` sites and normalized to unit mass.
#[derive(Debug, Clone, Serialize)]
pub struct Mollifier<T> {
    pub delta_s: f64,
    pub radius: usize,
    /// Weights for offsets `-radius ..= radius`; non-negative, summing to 1
    /// exactly (the center weight absorbs the normalization residual).
    pub weights: Vec<T>,
}

impl<T: Scalar> Mollifier<T> {
    /// Build the kernel at scaling parameter `n` and smoothing exponent
    /// `delta_s`.
    pub fn bump(n: u32, delta_s: f64) -> Self {
        let scale = f64::from(n).powf(1.0 - delta_s);
        let radius = scale.ceil() as usize;
        let mut weights: Vec<T> = (-(radius as i64)..=(radius as i64))
            .map(|x| {
                let u = x as f64 / scale;
                if u.abs() < 1.0 {
                    T::of((-1.0 / (1.0 - u * u)).exp())
                } else {
                    T::zero()
                }
            })
            .collect();
        let total: T = weights.iter().copied().sum();
        for w in weights.iter_mut() {
            *w = *w / total;
        }
        // absorb the rounding residual into the center weight so the mass is
        // exactly one
        let resid = T::one() - weights.iter().copied().sum();
        weights[radius] = weights[radius] + resid;
        Self {
            delta_s,
            radius,
            weights,
        }
    }

    pub fn support(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Check the kernel fits on a ring of `m` sites.
    pub fn check_ring(&self, m: usize) -> Result<(), ColeHopfError> {
        if self.support() >= m {
            return Err(ColeHopfError::MollifierTooWide {
                support: self.support(),
                m,
            });
        }
        Ok(())
    }

    /// Periodic convolution `(kernel * f)_x = sum_w weights_w f_{x-w}`.
    pub fn convolve(&self, f: &[T]) -> Vec<T> {
        let m = f.len();
        let r = self.radius as i64;
        let mut out = Vec::with_capacity(m);
        for x in 0..m as i64 {
            let mut acc = T::zero();
            for (i, &w) in self.weights.iter().enumerate() {
                if w == T::zero() {
                    continue;
                }
                let off = i as i64 - r;
                acc = acc + w * f[wrap(x - off, m)];
            }
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::wrap;
    use proptest::prelude::*;

    #[test]
    fn mass_is_exactly_one() {
        for (n, d) in [(16u32, 0.1), (64, 0.1), (256, 0.0), (512, 0.25)] {
            let k = Mollifier::<f64>::bump(n, d);
            assert!((k.mass() - 1.0).abs() < 1e-15, "n = {n}");
            assert!(k.weights.iter().all(|&w| w >= 0.0));
            assert!(k.radius <= (f64::from(n).powf(1.0 - d)).ceil() as usize);
        }
    }

    #[test]
    fn constant_field_is_fixed() {
        let k = Mollifier::<f64>::bump(16, 0.1);
        let f = vec![3.5; 64];
        let g = k.convolve(&f);
        for v in g {
            assert!((v - 3.5).abs() < 1e-13);
        }
    }

    #[test]
    fn too_wide_for_ring_is_an_error() {
        let k = Mollifier::<f64>::bump(64, 0.1);
        assert!(k.check_ring(32).is_err());
        assert!(k.check_ring(256).is_ok());
    }

    proptest! {
        /// Convolution commutes with the ring gradient `(grad_l f)_x =
        /// f_{x+l} - f_x` exactly.
        #[test]
        fn convolution_commutes_with_gradient(seed in 0u64..1000, l in 1i64..5) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let m = 64usize;
            let f: Vec<f64> = (0..m).map(|_| f64::std_normal(&mut rng)).collect();
            let k = Mollifier::<f64>::bump(8, 0.1);
            let grad = |f: &[f64]| -> Vec<f64> {
                (0..m).map(|x| f[wrap(x as i64 + l, m)] - f[x]).collect()
            };
            let a = k.convolve(&grad(&f));
            let b = grad(&k.convolve(&f));
            for (x, (u, v)) in a.iter().zip(&b).enumerate() {
                prop_assert!((u - v).abs() < 1e-14, "x = {}", x);
            }
        }
    }
}
