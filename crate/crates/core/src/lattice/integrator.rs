//! Euler-Maruyama stepping, noise sources, and the run loop.

use rand::Rng;

use super::nonlinearity::{f_at, f_tilde_at};
use super::{FieldState, LatticeError, SimConfig};
use crate::potential::{ModelConstants, PotentialSpec};
use crate::scalar::Scalar;

/// Blow-up threshold on |phi|; the equilibrium marginals are sub-Gaussian
/// with unit-order variance, so this is far outside the physical range.
pub const BLOW_UP_THRESHOLD: f64 = 1e3;

/// Source of the per-step Gaussian increments `dB_x ~ N(0, dt)`.
///
/// The lattice dynamics is the single producer of noise; consumers that must
/// be coupled to it (the multiplicative-noise heat equation, the stochastic
/// kernels) replay a recorded tape instead of drawing fresh randomness.
pub trait NoiseSource<T> {
    /// Fill `buf` with the increments for the next step.
    fn fill(&mut self, buf: &mut [T]) -> Result<(), LatticeError>;
}

/// Fresh Gaussian increments from an RNG.
pub struct FreshNoise<R> {
    rng: R,
    sqrt_dt: f64,
}

impl<R: Rng> FreshNoise<R> {
    pub fn new(rng: R, dt: f64) -> Self {
        Self {
            rng,
            sqrt_dt: dt.sqrt(),
        }
    }
}

impl<T: Scalar, R: Rng> NoiseSource<T> for FreshNoise<R> {
    fn fill(&mut self, buf: &mut [T]) -> Result<(), LatticeError> {
        let s = T::of(self.sqrt_dt);
        for b in buf.iter_mut() {
            *b = s * T::std_normal(&mut self.rng);
        }
        Ok(())
    }
}

/// A recorded stream of increments: `steps` rows of `m` values.
#[derive(Debug, Clone)]
pub struct NoiseTape<T> {
    pub m: usize,
    pub dt: f64,
    pub data: Vec<T>,
}

impl<T: Scalar> NoiseTape<T> {
    pub fn with_capacity(m: usize, dt: f64, steps: usize) -> Self {
        Self {
            m,
            dt,
            data: Vec::with_capacity(m * steps),
        }
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.m
    }

    /// Replay cursor starting at `step`.
    pub fn replay(&self, step: usize) -> TapeNoise<'_, T> {
        TapeNoise { tape: self, step }
    }

    /// Replay at `factor`-coarser resolution: consecutive fine increments are
    /// summed, which preserves the underlying Brownian path.
    pub fn replay_coarse(&self, step: usize, factor: usize) -> CoarseTape<'_, T> {
        CoarseTape {
            tape: self,
            step,
            factor,
        }
    }
}

/// Replays a tape at its native resolution.
pub struct TapeNoise<'a, T> {
    tape: &'a NoiseTape<T>,
    step: usize,
}

impl<T: Scalar> NoiseSource<T> for TapeNoise<'_, T> {
    fn fill(&mut self, buf: &mut [T]) -> Result<(), LatticeError> {
        let m = self.tape.m;
        debug_assert_eq!(buf.len(), m);
        let lo = self.step * m;
        if lo + m > self.tape.data.len() {
            return Err(LatticeError::TapeExhausted {
                step: self.step,
                steps: self.tape.steps(),
            });
        }
        buf.copy_from_slice(&self.tape.data[lo..lo + m]);
        self.step += 1;
        Ok(())
    }
}

/// Replays a tape with `factor` fine increments aggregated per step.
pub struct CoarseTape<'a, T> {
    tape: &'a NoiseTape<T>,
    step: usize,
    factor: usize,
}

impl<T: Scalar> NoiseSource<T> for CoarseTape<'_, T> {
    fn fill(&mut self, buf: &mut [T]) -> Result<(), LatticeError> {
        let m = self.tape.m;
        for b in buf.iter_mut() {
            *b = T::zero();
        }
        for _ in 0..self.factor {
            let lo = self.step * m;
            if lo + m > self.tape.data.len() {
                return Err(LatticeError::TapeExhausted {
                    step: self.step,
                    steps: self.tape.steps(),
                });
            }
            for (b, &v) in buf.iter_mut().zip(&self.tape.data[lo..lo + m]) {
                *b = *b + v;
            }
            self.step += 1;
        }
        Ok(())
    }
}

/// Draws fresh increments while recording them onto a tape.
pub struct RecordingNoise<'a, R, T> {
    inner: FreshNoise<R>,
    tape: &'a mut NoiseTape<T>,
}

impl<'a, R: Rng, T: Scalar> RecordingNoise<'a, R, T> {
    pub fn new(rng: R, tape: &'a mut NoiseTape<T>) -> Self {
        let dt = tape.dt;
        Self {
            inner: FreshNoise::new(rng, dt),
            tape,
        }
    }
}

impl<R: Rng, T: Scalar> NoiseSource<T> for RecordingNoise<'_, R, T> {
    fn fill(&mut self, buf: &mut [T]) -> Result<(), LatticeError> {
        NoiseSource::<T>::fill(&mut self.inner, buf)?;
        self.tape.data.extend_from_slice(buf);
        Ok(())
    }
}

/// Drift of the gradient field: `N^2 Delta U'[phi] + N^{3/2} Ftilde`.
pub fn drift<T: Scalar>(
    state: &FieldState<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    cfg: &SimConfig,
) -> Result<Vec<T>, LatticeError> {
    let m = state.m();
    let nf = T::of(f64::from(cfg.n));
    let n2 = nf * nf;
    let n32 = nf * nf.sqrt();
    let u: Vec<T> = state.phi.iter().map(|&a| spec.u_prime(a)).collect();
    let mut out = Vec::with_capacity(m);
    let two = T::of(2.0);
    for x in 0..m {
        let xl = (x + m - 1) % m;
        let xr = (x + 1) % m;
        let lap = u[xr] + u[xl] - two * u[x];
        let v = n2 * lap + n32 * f_tilde_at(&u, x as i64, constants);
        if !v.is_finite() {
            return Err(LatticeError::Instability {
                site: x,
                t: state.t.as_f64(),
            });
        }
        out.push(v);
    }
    Ok(out)
}

/// Advance one step with externally supplied increments (`noise[x] = dB_x`).
pub fn step_with_noise<T: Scalar>(
    state: &mut FieldState<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    cfg: &SimConfig,
    dt: T,
    noise: &[T],
) -> Result<(), LatticeError> {
    let m = state.m();
    debug_assert_eq!(noise.len(), m);
    let nf = T::of(f64::from(cfg.n));
    let sqrt2 = T::of(2.0).sqrt();

    // origin height update from the pre-step field
    let u0 = spec.u_prime(state.phi[0]);
    let u1 = spec.u_prime(state.phi[1 % m]);
    let u: Vec<T> = state.phi.iter().map(|&a| spec.u_prime(a)).collect();
    let f0 = f_at(&u, 0, constants);
    let n32 = nf * nf.sqrt();
    state.j0 = state.j0
        + (n32 * (u1 - u0) + nf * f0) * dt
        + sqrt2 * nf.sqrt() * noise[0];

    // field update
    let two = T::of(2.0);
    let n2 = nf * nf;
    let mut new_phi = Vec::with_capacity(m);
    for x in 0..m {
        let xl = (x + m - 1) % m;
        let xr = (x + 1) % m;
        let lap = u[xr] + u[xl] - two * u[x];
        let dr = n2 * lap + n32 * f_tilde_at(&u, x as i64, constants);
        if !dr.is_finite() {
            return Err(LatticeError::Instability {
                site: x,
                t: state.t.as_f64(),
            });
        }
        new_phi.push(state.phi[x] + dr * dt + sqrt2 * nf * (noise[x] - noise[xl]));
    }
    state.phi = new_phi;
    state.t = state.t + dt;
    state.steps += 1;

    let threshold = T::of(BLOW_UP_THRESHOLD);
    let mut min = T::infinity();
    let mut max = T::neg_infinity();
    let mut worst = (0usize, T::zero());
    for (x, &v) in state.phi.iter().enumerate() {
        min = min.min(v);
        max = max.max(v);
        if v.abs() > worst.1.abs() {
            worst = (x, v);
        }
    }
    if worst.1.abs() > threshold || !worst.1.is_finite() {
        return Err(LatticeError::BlowUp {
            t: state.t.as_f64(),
            site: worst.0,
            value: worst.1.as_f64(),
            threshold: BLOW_UP_THRESHOLD,
            min: min.as_f64(),
            max: max.as_f64(),
        });
    }
    Ok(())
}

/// Advance one step, drawing increments from `source` into `noise_buf`.
pub fn step<T: Scalar>(
    state: &mut FieldState<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    cfg: &SimConfig,
    dt: T,
    source: &mut dyn NoiseSource<T>,
    noise_buf: &mut [T],
) -> Result<(), LatticeError> {
    source.fill(noise_buf)?;
    step_with_noise(state, spec, constants, cfg, dt, noise_buf)
}

/// Advance to the configured horizon, invoking `observe` every
/// `observer_stride` steps (and once on the initial state).
pub fn run<T: Scalar>(
    state: &mut FieldState<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    cfg: &SimConfig,
    source: &mut dyn NoiseSource<T>,
    mut observe: impl FnMut(&FieldState<T>, &[T]),
) -> Result<(), LatticeError> {
    let dt = cfg.dt(spec, constants);
    let steps = cfg.steps(spec, constants);
    let mut noise = vec![T::zero(); state.m()];
    observe(state, &noise);
    for s in 0..steps {
        step(state, spec, constants, cfg, dt, source, &mut noise)?;
        if cfg.observer_stride > 0 && (s + 1) % cfg.observer_stride == 0 {
            observe(state, &noise);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{height_field, init_equilibrium};
    use crate::potential::{compute_constants, tilt_for_mean};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn setup(betas: &[f64]) -> (PotentialSpec<f64>, ModelConstants<f64>) {
        let spec = PotentialSpec::gaussian();
        let c = compute_constants(&spec, betas).unwrap();
        (spec, c)
    }

    #[test]
    fn laplacian_drift_at_a_spike() {
        // F = 0, N = 2, phi = delta: drift at the peak is -2 N^2 = -8
        let (spec, c) = setup(&[0.0]);
        let cfg = SimConfig {
            n: 4,
            m: 16,
            ..Default::default()
        };
        let mut phi = vec![0.0; 16];
        phi[5] = 1.0;
        let state = FieldState::new(phi);
        let cfg2 = SimConfig { n: 2, ..cfg };
        let d = drift(&state, &spec, &c, &cfg2).unwrap();
        assert!((d[5] + 8.0).abs() < 1e-12);
        assert!((d[4] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_a_drift_fixed_point() {
        let (spec, c) = setup(&[1.0, 0.3]);
        let cfg = SimConfig::default();
        let state = FieldState::new(vec![0.7; cfg.m]);
        let d = drift(&state, &spec, &c, &cfg).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-10));
        // zero noise leaves the field unchanged
        let mut s2 = state.clone();
        let dt = cfg.dt(&spec, &c);
        step_with_noise(&mut s2, &spec, &c, &cfg, dt, &vec![0.0; cfg.m]).unwrap();
        for x in 0..cfg.m {
            assert!((s2.phi[x] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_sums_to_zero() {
        let (spec, c) = setup(&[1.0, 0.3]);
        let cfg = SimConfig::default();
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let d = drift(&state, &spec, &c, &cfg).unwrap();
        let total: f64 = d.iter().sum();
        let scale: f64 = d.iter().map(|v| v.abs()).sum();
        assert!(total.abs() <= 1e-12 * (1.0 + scale), "sum {total}");
    }

    #[test]
    fn field_sum_is_conserved_per_step() {
        let (spec, c) = setup(&[1.0, 0.3]);
        let cfg = SimConfig::default();
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let mut state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let dt = cfg.dt(&spec, &c);
        let before = state.phi_sum();
        let mut source = FreshNoise::new(ChaCha12Rng::seed_from_u64(11), dt);
        let mut buf = vec![0.0; cfg.m];
        for _ in 0..50 {
            step(&mut state, &spec, &c, &cfg, dt, &mut source, &mut buf).unwrap();
        }
        let after = state.phi_sum();
        let scale: f64 = state.phi.iter().map(|v| v.abs()).sum();
        assert!(
            (after - before).abs() <= 1e-12 * (1.0 + scale),
            "drift {}",
            after - before
        );
    }

    #[test]
    fn height_gradient_consistency_along_a_run() {
        // differencing reconstructed heights reproduces phi exactly at all
        // observation times
        let (spec, c) = setup(&[1.0, 0.3]);
        let cfg = SimConfig {
            horizon: 0.002,
            ..Default::default()
        };
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let mut state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let mut source = FreshNoise::new(ChaCha12Rng::seed_from_u64(13), cfg.dt(&spec, &c));
        let scale = (cfg.n as f64).sqrt();
        run(&mut state, &spec, &c, &cfg, &mut source, |s, _| {
            let j = height_field(s, cfg.n);
            for x in 1..cfg.m {
                assert!((scale * (j[x] - j[x - 1]) - s.phi[x]).abs() < 1e-12);
            }
        })
        .unwrap();
        assert!(state.t > 0.0);
    }

    #[test]
    fn zero_horizon_is_identity() {
        let (spec, c) = setup(&[1.0]);
        let cfg = SimConfig {
            horizon: 0.0,
            ..Default::default()
        };
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let mut state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let before = state.clone();
        let mut source = FreshNoise::new(ChaCha12Rng::seed_from_u64(15), 1e-5);
        run(&mut state, &spec, &c, &cfg, &mut source, |_, _| {}).unwrap();
        assert_eq!(state.phi, before.phi);
        assert_eq!(state.t, before.t);
    }

    #[test]
    fn identical_seeds_give_bit_identical_trajectories() {
        let (spec, c) = setup(&[1.0, 0.3]);
        let cfg = SimConfig {
            horizon: 0.002,
            ..Default::default()
        };
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let run_once = || {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            let mut state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
            let mut source = FreshNoise::new(rng, cfg.dt(&spec, &c));
            run(&mut state, &spec, &c, &cfg, &mut source, |_, _| {}).unwrap();
            state
        };
        let a = run_once();
        let b = run_once();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.j0, b.j0);
    }

    #[test]
    fn blow_up_is_reported_with_context() {
        let (spec, c) = setup(&[1.0]);
        let cfg = SimConfig::default();
        let mut state = FieldState::new(vec![0.0; cfg.m]);
        state.phi[3] = 999.0;
        // a huge increment pushes site 3 over the threshold
        let mut noise = vec![0.0; cfg.m];
        noise[3] = 5.0;
        let dt = cfg.dt(&spec, &c);
        let err = step_with_noise(&mut state, &spec, &c, &cfg, dt, &noise).unwrap_err();
        match err {
            LatticeError::BlowUp { site, value, .. } => {
                assert_eq!(site, 3);
                assert!(value.abs() > BLOW_UP_THRESHOLD);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn coarse_tape_aggregates_increments() {
        let mut tape = NoiseTape::<f64>::with_capacity(2, 0.1, 4);
        tape.data = vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0];
        let mut coarse = tape.replay_coarse(0, 2);
        let mut buf = [0.0; 2];
        NoiseSource::fill(&mut coarse, &mut buf).unwrap();
        assert_eq!(buf, [3.0, 30.0]);
        NoiseSource::fill(&mut coarse, &mut buf).unwrap();
        assert_eq!(buf, [7.0, 70.0]);
        assert!(NoiseSource::fill(&mut coarse, &mut buf).is_err());
    }

    /// With F = 0 and the gaussian potential the dynamics is an explicit
    /// Ornstein-Uhlenbeck system: each Fourier mode relaxes at rate
    /// `N^2 mu_k`, `mu_k = 4 sin^2(pi k / M)`. Check the stationary mode
    /// variance and the lag autocorrelation against the exact solution.
    #[test]
    fn ou_modes_match_exact_solution() {
        let (spec, c) = setup(&[0.0]);
        let n = 4u32;
        let m = 8usize;
        let cfg = SimConfig {
            n,
            m,
            horizon: 0.0,
            ..Default::default()
        };
        let ens = tilt_for_mean(&spec, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let mut state = init_equilibrium(&ens, &cfg, &mut rng).unwrap();
        let dt = cfg.dt(&spec, &c);
        let mut source = FreshNoise::new(ChaCha12Rng::seed_from_u64(22), dt);
        let mut buf = vec![0.0; m];

        let k = 1usize;
        let mu_k = 4.0 * (std::f64::consts::PI * k as f64 / m as f64).sin().powi(2);
        let rate = (n as f64).powi(2) * mu_k;
        // pick a lag with rate * lag * dt ~ 0.7 for a strong signal
        let lag = (0.7 / (rate * dt)).round() as usize;

        let mode = |phi: &[f64]| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (x, &v) in phi.iter().enumerate() {
                let th = 2.0 * std::f64::consts::PI * (k * x) as f64 / m as f64;
                re += v * th.cos();
                im += v * th.sin();
            }
            let norm = (m as f64).sqrt();
            (re / norm, im / norm)
        };

        let samples = 30_000usize;
        let mut series = Vec::with_capacity(samples);
        for _ in 0..samples {
            step(&mut state, &spec, &c, &cfg, dt, &mut source, &mut buf).unwrap();
            series.push(mode(&state.phi));
        }
        let var: f64 = series.iter().map(|(re, im)| re * re + im * im).sum::<f64>()
            / samples as f64;
        assert!((var - 1.0).abs() < 0.08, "mode variance {var}");
        let mut cov = 0.0;
        for i in lag..samples {
            let (a, b) = series[i - lag];
            let (x, y) = series[i];
            cov += a * x + b * y;
        }
        cov /= (samples - lag) as f64;
        let rho = cov / var;
        let expected = (-rate * lag as f64 * dt).exp();
        assert!(
            (rho - expected).abs() < 0.06,
            "autocorrelation {rho} vs {expected}"
        );
    }
}
