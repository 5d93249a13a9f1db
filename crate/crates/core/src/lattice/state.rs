//! Field state, equilibrium initialization, and height reconstruction.

use rand::Rng;

use super::{LatticeError, SimConfig};
use crate::potential::{sample_ensemble, Ensemble};
use crate::scalar::Scalar;

/// Full simulation state: gradient field on the ring, origin height, time.
#[derive(Debug, Clone)]
pub struct FieldState<T> {
    pub t: T,
    pub phi: Vec<T>,
    pub j0: T,
    /// Steps taken so far (also the RNG cursor for bookkeeping).
    pub steps: u64,
}

impl<T: Scalar> FieldState<T> {
    pub fn new(phi: Vec<T>) -> Self {
        Self {
            t: T::zero(),
            phi,
            j0: T::zero(),
            steps: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.phi.len()
    }

    /// Conserved field sum.
    pub fn phi_sum(&self) -> T {
        self.phi.iter().copied().sum()
    }
}

/// Draw i.i.d. product-measure initial data with zero origin height.
pub fn init_equilibrium<T: Scalar, R: Rng + ?Sized>(
    ens: &Ensemble<T>,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<FieldState<T>, LatticeError> {
    let phi = sample_ensemble(ens, cfg.m, rng)?;
    Ok(FieldState::new(phi))
}

/// Heights `j_x = j_0 + N^{-1/2} sum_{0 < w <= x} phi_w` for `x = 0..=M`.
///
/// The last entry wraps the full ring, so `j_M - j_0 = N^{-1/2} sum phi`.
pub fn height_field<T: Scalar>(state: &FieldState<T>, n: u32) -> Vec<T> {
    let m = state.m();
    let scale = T::of(f64::from(n)).sqrt().recip();
    let mut heights = Vec::with_capacity(m + 1);
    let mut acc = state.j0;
    heights.push(acc);
    for x in 1..=m {
        acc = acc + scale * state.phi[x % m];
        heights.push(acc);
    }
    heights
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{tilt_for_mean, PotentialSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_field_gives_flat_heights() {
        let state = FieldState::new(vec![0.0f64; 16]);
        let j = height_field(&state, 4);
        assert!(j.iter().all(|&v| v == 0.0));
        assert_eq!(j.len(), 17);
    }

    #[test]
    fn single_spike_unit_increment() {
        // phi_1 = sqrt(N) makes j_1 - j_0 = 1
        let n = 9u32;
        let mut phi = vec![0.0f64; 8];
        phi[1] = 3.0;
        let state = FieldState::new(phi);
        let j = height_field(&state, n);
        assert!((j[1] - j[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn height_differences_reproduce_phi() {
        let ens = tilt_for_mean(&PotentialSpec::<f64>::gaussian(), 0.0).unwrap();
        let cfg = SimConfig {
            m: 64,
            ..Default::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let j = height_field(&state, cfg.n);
        let scale = (cfg.n as f64).sqrt();
        for x in 1..cfg.m {
            let diff = scale * (j[x] - j[x - 1]);
            assert!((diff - state.phi[x]).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn equilibrium_marginals_look_standard_normal() {
        let ens = tilt_for_mean(&PotentialSpec::<f64>::gaussian(), 0.0).unwrap();
        let cfg = SimConfig {
            m: 128,
            ..Default::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut pooled = Vec::new();
        for _ in 0..100 {
            pooled.extend(init_equilibrium(&ens, &cfg, &mut rng).unwrap().phi);
        }
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let var = pooled.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 0.03);
    }

    #[test]
    fn tilted_equilibrium_matches_target_mean() {
        let spec = PotentialSpec::<f64>::cosine_perturbed(0.2).unwrap();
        let ens = tilt_for_mean(&spec, 0.3).unwrap();
        let cfg = SimConfig {
            m: 128,
            ..Default::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut pooled = Vec::new();
        for _ in 0..100 {
            pooled.extend(init_equilibrium(&ens, &cfg, &mut rng).unwrap().phi);
        }
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let se = (ens.variance() / n).sqrt();
        assert!((mean - 0.3).abs() < 4.0 * se, "mean {mean}");
    }
}
