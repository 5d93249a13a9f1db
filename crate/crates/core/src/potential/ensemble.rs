//! Tilted single-site ensembles: partition values, tilt inversion, moments,
//! and rejection sampling.

use rand::Rng;

use super::{PotentialError, PotentialSpec};
use crate::numerics::quad::adaptive_gk;
use crate::scalar::Scalar;

/// Largest |sigma| accepted by default in [`tilt_for_mean`].
pub const DEFAULT_MEAN_CAP: f64 = 4.0;

/// Half-width of the integration window in units of `sqrt(Lambda)`; the
/// convex part makes the truncated tail mass below 1e-14.
const WINDOW_SIGMAS: f64 = 12.0;

/// Absolute quadrature tolerance for the shifted (order-one) integrals.
const QUAD_TOL: f64 = 1e-13;

/// A tilted ensemble with cached partition value and low moments.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    spec: PotentialSpec<T>,
    sigma: T,
    upsilon: T,
    log_z: T,
    /// E^sigma[phi^k] for k = 0..=8.
    phi_moments: [T; 9],
    /// Mode of the tilted density (integration window center).
    mode: T,
    /// Exponent shift used for overflow-free integration.
    shift: T,
}

fn density_mode<T: Scalar>(spec: &PotentialSpec<T>, upsilon: T) -> T {
    // Solve U'(m) = upsilon by Newton; U'' >= 1 - kappa >= 1/2 keeps it safe.
    let mut m = upsilon;
    for _ in 0..64 {
        let (_, du, ddu) = spec.eval_unchecked(m);
        let step = (du - upsilon) / ddu;
        m = m - step;
        if step.abs() < T::of(1e-14) {
            break;
        }
    }
    m
}

/// Integrate `f(a) * exp(-U(a) + upsilon a - shift)` over the effective
/// support window.
fn weighted_integral<T: Scalar>(
    spec: &PotentialSpec<T>,
    upsilon: T,
    mode: T,
    shift: T,
    f: impl Fn(T) -> T,
    tol: T,
) -> Result<T, PotentialError> {
    let w = T::of(WINDOW_SIGMAS) * spec.lambda_bound().sqrt();
    let g = |a: T| {
        let (u, _, _) = spec.eval_unchecked(a);
        f(a) * (upsilon * a - u - shift).exp()
    };
    let r = adaptive_gk(&g, mode - w, mode + w, tol)?;
    Ok(r.value)
}

/// Log partition value `log Z(upsilon) = log int exp(-U[a] + upsilon a) da`.
pub fn partition_function<T: Scalar>(
    spec: &PotentialSpec<T>,
    upsilon: T,
) -> Result<T, PotentialError> {
    let mode = density_mode(spec, upsilon);
    let (u_m, _, _) = spec.eval_unchecked(mode);
    let shift = upsilon * mode - u_m;
    let z = weighted_integral(spec, upsilon, mode, shift, |_| T::one(), T::of(QUAD_TOL))?;
    Ok(z.ln() + shift)
}

impl<T: Scalar> Ensemble<T> {
    fn from_upsilon(spec: PotentialSpec<T>, upsilon: T) -> Result<Self, PotentialError> {
        let mode = density_mode(&spec, upsilon);
        let (u_m, _, _) = spec.eval_unchecked(mode);
        let shift = upsilon * mode - u_m;
        let tol = T::of(QUAD_TOL);
        let z = weighted_integral(&spec, upsilon, mode, shift, |_| T::one(), tol)?;
        let mut phi_moments = [T::zero(); 9];
        for (k, slot) in phi_moments.iter_mut().enumerate() {
            let raw =
                weighted_integral(&spec, upsilon, mode, shift, |a| a.powi(k as i32), tol)?;
            *slot = raw / z;
        }
        Ok(Self {
            spec,
            sigma: phi_moments[1],
            upsilon,
            log_z: z.ln() + shift,
            phi_moments,
            mode,
            shift,
        })
    }

    pub fn spec(&self) -> &PotentialSpec<T> {
        &self.spec
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn upsilon(&self) -> T {
        self.upsilon
    }

    pub fn log_z(&self) -> T {
        self.log_z
    }

    /// Cached `E^sigma[phi^k]`, `k <= 8`.
    pub fn phi_moment(&self, k: usize) -> T {
        self.phi_moments[k]
    }

    pub fn mean(&self) -> T {
        self.phi_moments[1]
    }

    pub fn variance(&self) -> T {
        self.phi_moments[2] - self.phi_moments[1] * self.phi_moments[1]
    }

    /// `E^sigma[f(phi)]` for an arbitrary single-site observable.
    pub fn expect_fn(&self, f: impl Fn(T) -> T) -> Result<T, PotentialError> {
        let z = (self.log_z - self.shift).exp();
        let raw = weighted_integral(
            &self.spec,
            self.upsilon,
            self.mode,
            self.shift,
            f,
            T::of(QUAD_TOL),
        )?;
        Ok(raw / z)
    }

    /// `E^sigma[phi^p * (U'[phi])^q]`, the building block for product-form
    /// local-function moments.
    pub fn site_moment(&self, phi_pow: u8, du_pow: u8) -> Result<T, PotentialError> {
        if du_pow == 0 && usize::from(phi_pow) < self.phi_moments.len() {
            return Ok(self.phi_moments[usize::from(phi_pow)]);
        }
        let spec = self.spec;
        self.expect_fn(move |a| {
            let du = spec.u_prime(a);
            a.powi(i32::from(phi_pow)) * du.powi(i32::from(du_pow))
        })
    }
}

/// Find the tilt achieving mean `sigma` and build the ensemble around it.
///
/// Newton iteration on the strictly increasing map `upsilon -> mean`; the
/// derivative is the (positive) tilted variance.
pub fn tilt_for_mean<T: Scalar>(
    spec: &PotentialSpec<T>,
    sigma: T,
) -> Result<Ensemble<T>, PotentialError> {
    tilt_for_mean_capped(spec, sigma, T::of(DEFAULT_MEAN_CAP))
}

pub fn tilt_for_mean_capped<T: Scalar>(
    spec: &PotentialSpec<T>,
    sigma: T,
    cap: T,
) -> Result<Ensemble<T>, PotentialError> {
    if sigma.abs() > cap {
        return Err(PotentialError::MeanCapExceeded {
            sigma: sigma.as_f64(),
            cap: cap.as_f64(),
        });
    }
    // Even potentials pin the zero tilt; skip the solve to keep sigma = 0 exact.
    if sigma == T::zero() && spec.is_even() {
        return Ensemble::from_upsilon(*spec, T::zero());
    }
    // 1e-11 at f64; scaled up to what the mantissa supports at f32
    let tol = T::of(1e-11).max(T::epsilon() * T::of(64.0));
    let mut upsilon = sigma; // exact for the gaussian; good start otherwise
    let mut ens = Ensemble::from_upsilon(*spec, upsilon)?;
    for _ in 0..100 {
        let resid = ens.mean() - sigma;
        if resid.abs() <= tol {
            return Ok(ens);
        }
        upsilon = upsilon - resid / ens.variance();
        ens = Ensemble::from_upsilon(*spec, upsilon)?;
    }
    Err(PotentialError::TiltNonConvergence {
        sigma: sigma.as_f64(),
        residual: (ens.mean() - sigma).abs().as_f64(),
    })
}

/// Draw `n` i.i.d. values from the ensemble by rejection against a Gaussian
/// envelope built from the convexity bound and the perturbation sup-norm.
pub fn sample_ensemble<T: Scalar, R: Rng + ?Sized>(
    ens: &Ensemble<T>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<T>, PotentialError> {
    let spec = ens.spec();
    let lambda = spec.lambda_bound();
    let sd = lambda.sqrt();
    let upsilon = ens.upsilon();
    // Envelope center: mode of the convex part under the tilt (U1' = id for
    // the built-ins, so this is just upsilon).
    let x0 = upsilon;
    let half = T::of(0.5);
    let u1_x0 = half * x0 * x0;
    let log_env_peak = upsilon * x0 - u1_x0 + spec.u2_sup();
    let mut out = Vec::with_capacity(n);
    let mut proposals = 0u64;
    while out.len() < n {
        proposals += 1;
        let z = T::std_normal(rng);
        let a = x0 + sd * z;
        let (u, _, _) = spec.eval_unchecked(a);
        // log target - log envelope, both up to the same normalization
        let log_accept = (upsilon * a - u) - (log_env_peak - half * z * z);
        debug_assert!(log_accept <= T::of(1e-12));
        let u01 = T::unit_open(rng);
        if u01.ln() <= log_accept {
            out.push(a);
        }
        if proposals > 10_000 && (out.len() as f64) < proposals as f64 * 1e-3 {
            return Err(PotentialError::SamplerAcceptance {
                rate: out.len() as f64 / proposals as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gaussian() -> PotentialSpec<f64> {
        PotentialSpec::gaussian()
    }

    fn perturbed() -> PotentialSpec<f64> {
        PotentialSpec::cosine_perturbed(0.2).unwrap()
    }

    #[test]
    fn gaussian_partition_values() {
        let log_sqrt_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let z0 = partition_function(&gaussian(), 0.0).unwrap();
        assert!((z0 - log_sqrt_2pi).abs() < 1e-12);
        // complete the square: log Z(1) = log sqrt(2 pi) + 1/2
        let z1 = partition_function(&gaussian(), 1.0).unwrap();
        assert!((z1 - log_sqrt_2pi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tilt_shifts_mean() {
        let ens = tilt_for_mean(&gaussian(), 0.7).unwrap();
        assert!((ens.upsilon() - 0.7).abs() < 1e-10);
        assert!((ens.mean() - 0.7).abs() < 1e-10);
        assert!((ens.variance() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn even_spec_zero_mean_zero_tilt() {
        for spec in [gaussian(), perturbed()] {
            let ens = tilt_for_mean(&spec, 0.0).unwrap();
            assert_eq!(ens.upsilon(), 0.0);
            assert!(ens.mean().abs() < 1e-12);
            assert!(ens.variance() > 0.0);
        }
    }

    #[test]
    fn perturbed_tilt_round_trip() {
        let ens = tilt_for_mean(&perturbed(), 0.3).unwrap();
        // re-quadrature the mean independently of the Newton path
        let mean = ens.expect_fn(|a| a).unwrap();
        assert!((mean - 0.3).abs() < 1e-10, "mean {mean}");
    }

    #[test]
    fn tilt_identity_on_sigma_grid() {
        for spec in [gaussian(), perturbed()] {
            for i in -4..=4 {
                let sigma = 0.5 * i as f64;
                let ens = tilt_for_mean(&spec, sigma).unwrap();
                assert!((ens.mean() - sigma).abs() < 1e-10, "sigma {sigma}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            tilt_for_mean(&gaussian(), 5.0),
            Err(PotentialError::MeanCapExceeded { .. })
        ));
    }

    #[test]
    fn gaussian_moments_match_known_values() {
        let ens = tilt_for_mean(&gaussian(), 0.0).unwrap();
        assert!((ens.phi_moment(2) - 1.0).abs() < 1e-11);
        assert!((ens.phi_moment(4) - 3.0).abs() < 1e-10);
        assert!((ens.phi_moment(6) - 15.0).abs() < 1e-9);
        // E[U' phi^3] = E[phi^4] = 3 for the gaussian
        assert!((ens.site_moment(3, 1).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn integration_by_parts_identity() {
        // E[F U'] = upsilon E[F] + E[F'] for F = 1, a, a^2
        for spec in [gaussian(), perturbed()] {
            for sigma in [0.0, 0.5, -0.5] {
                let ens = tilt_for_mean(&spec, sigma).unwrap();
                let v = ens.upsilon();
                let cases: [(fn(f64) -> f64, fn(f64) -> f64); 3] = [
                    (|_| 1.0, |_| 0.0),
                    (|a| a, |_| 1.0),
                    (|a| a * a, |a| 2.0 * a),
                ];
                for (f, fp) in cases {
                    let lhs = ens
                        .expect_fn(|a| f(a) * ens.spec().u_prime(a))
                        .unwrap();
                    let rhs = v * ens.expect_fn(f).unwrap() + ens.expect_fn(fp).unwrap();
                    assert!((lhs - rhs).abs() < 1e-8, "ibp {sigma}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn gaussian_sampler_is_exact_envelope() {
        let ens = tilt_for_mean(&gaussian(), 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 100_000;
        let xs = sample_ensemble(&ens, n, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn perturbed_sampler_matches_quadrature_mean() {
        let ens = tilt_for_mean(&perturbed(), 0.3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 100_000;
        let xs = sample_ensemble(&ens, n, &mut rng).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let tol = 4.0 * (ens.variance() / n as f64).sqrt();
        assert!((mean - 0.3).abs() < tol, "mean {mean} tol {tol}");
    }

    #[test]
    fn sampler_moments_match_quadrature_to_order_four() {
        let ens = tilt_for_mean(&perturbed(), 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 200_000;
        let xs = sample_ensemble(&ens, n, &mut rng).unwrap();
        for k in 1..=4u32 {
            let emp = xs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / n as f64;
            let exact = ens.phi_moment(k as usize);
            let emp_var = xs
                .iter()
                .map(|x| (x.powi(k as i32) - emp).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            let se = (emp_var / n as f64).sqrt();
            assert!(
                (emp - exact).abs() < 5.0 * se + 1e-12,
                "order {k}: {emp} vs {exact} (se {se:e})"
            );
        }
    }

    #[test]
    fn f32_ensemble_smoke() {
        let spec = PotentialSpec::<f32>::gaussian();
        let ens = tilt_for_mean_capped(&spec, 0.5f32, 4.0).unwrap();
        assert!((ens.mean() - 0.5).abs() < 1e-4);
    }
}
