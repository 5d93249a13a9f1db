//! Mesoscopic block averages weighted by height ratios, and the averaged
//! time-gradient operator.

use serde::{Deserialize, Serialize};

use super::ColeHopfError;
use crate::lattice::History;
use crate::potential::{LocalFn, ModelConstants, Orientation, PotentialSpec};
use crate::scalar::{wrap, Scalar};

/// Averaging scales: a time window and a site count.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AvConfig {
    pub t_av: f64,
    pub n_av: usize,
}

/// Default mesoscopic scales `t_av = N^{-2/3 - 10 delta_S}` and
/// `n_av = ceil(N^{1 - 3 delta_S / 2})`.
pub fn default_scales(n: u32, delta_s: f64) -> AvConfig {
    let nf = f64::from(n);
    AvConfig {
        t_av: nf.powf(-2.0 / 3.0 - 10.0 * delta_s),
        n_av: nf.powf(1.0 - 1.5 * delta_s).ceil().max(1.0) as usize,
    }
}

/// Space-only block average of a one-sided local function at ring site `x`.
///
/// Right-oriented windows average `q[tau_{x+j} phi]` over `j = 1..n_av` with
/// weight `exp(lambda N^{-1/2}(phi_{x+1} + .. + phi_{x+j}))`; left-oriented
/// windows mirror both the shift and the weight.
pub fn av_space<T: Scalar>(
    q: &LocalFn<T>,
    phi: &[T],
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    n: u32,
    x: i64,
    cfg: &AvConfig,
) -> Result<T, ColeHopfError> {
    let m = phi.len();
    if cfg.n_av + q.width() >= m {
        return Err(ColeHopfError::BlockTooWide {
            needed: cfg.n_av + q.width(),
            m,
        });
    }
    let orientation = q.orientation();
    if orientation == Orientation::TwoSided {
        return Err(ColeHopfError::TwoSidedWindow(q.name.clone()));
    }
    let lam_scaled = constants.lambda / T::of(f64::from(n)).sqrt();
    let u_prime = |a: T| spec.u_prime(a);
    let mut acc = T::zero();
    let mut height_sum = T::zero();
    for j in 1..=(cfg.n_av as i64) {
        let (site, weight_site) = match orientation {
            Orientation::Right => (x + j, x + j),
            Orientation::Left => (x - j, x - j + 1),
            Orientation::TwoSided => unreachable!(),
        };
        height_sum = height_sum + phi[wrap(weight_site, m)];
        acc = acc + q.eval_ring(phi, site, u_prime) * (lam_scaled * height_sum).exp();
    }
    Ok(acc / T::of(cfg.n_av as f64))
}

/// Space-time block average: the backwards-in-time mean over `[t - t_av, t]`
/// of the height-ratio-corrected space average,
///
/// ```text
///   (1/t_av) int_0^{t_av} (Z_{t-r,x} / Z_{t,x}) AvSpace_{t-r,x} dr,
///   Z_{t-r,x}/Z_{t,x} = exp(lambda (j_{t-r,x} - j_{t,x}) + lambda R_lambda r),
/// ```
///
/// computed by the trapezoid rule over the stored history slices. With
/// `t_av = 0` this is exactly [`av_space`] at the latest slice.
pub fn av_spacetime<T: Scalar>(
    q: &LocalFn<T>,
    history: &History<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    n: u32,
    x: i64,
    cfg: &AvConfig,
) -> Result<T, ColeHopfError> {
    let latest = history.latest().ok_or(ColeHopfError::InsufficientHistory {
        have_lo: f64::NAN,
        have_hi: f64::NAN,
        need_lo: 0.0,
        need_hi: 0.0,
    })?;
    let t = latest.t;
    if cfg.t_av <= 0.0 {
        return av_space(q, &latest.phi, spec, constants, n, x, cfg);
    }
    // clamp the window at time zero: early times average over what exists
    let t_lo = (t - T::of(cfg.t_av)).max(T::zero());
    let have_lo = history.oldest_t().unwrap();
    if have_lo > t_lo + T::of(1e-12) {
        return Err(ColeHopfError::InsufficientHistory {
            have_lo: have_lo.as_f64(),
            have_hi: t.as_f64(),
            need_lo: t_lo.as_f64(),
            need_hi: t.as_f64(),
        });
    }
    let slices = history.window(t_lo, t);
    if slices.len() < 2 {
        return av_space(q, &latest.phi, spec, constants, n, x, cfg);
    }
    let m = latest.phi.len();
    let xw = wrap(x, m);
    let lambda = constants.lambda;
    let j_t_x = latest.height(xw, n);
    // integrand at each stored slice
    let mut ts = Vec::with_capacity(slices.len());
    let mut vals = Vec::with_capacity(slices.len());
    for s in &slices {
        let r = t - s.t;
        let ratio = (lambda * (s.height(xw, n) - j_t_x) + lambda * constants.r_lambda * r).exp();
        let av = av_space(q, &s.phi, spec, constants, n, x, cfg)?;
        ts.push(s.t);
        vals.push(ratio * av);
    }
    // trapezoid over the (possibly ragged) slice times
    let mut integral = T::zero();
    for i in 1..ts.len() {
        integral = integral + (ts[i] - ts[i - 1]) * (vals[i] + vals[i - 1]) * T::of(0.5);
    }
    let covered = *ts.last().unwrap() - ts[0];
    Ok(integral / covered)
}

/// Integral of a uniform-grid series over `[a, b]` (grid spacing `dt`,
/// `f[i]` at time `i * dt`), linearly interpolated inside the grid and
/// extended by its boundary values outside.
pub fn integrate_series<T: Scalar>(f: &[T], dt: T, a: T, b: T) -> T {
    debug_assert!(b >= a);
    let last = T::of((f.len() - 1) as f64) * dt;
    let value_at = |s: T| -> T {
        if s <= T::zero() {
            f[0]
        } else if s >= last {
            f[f.len() - 1]
        } else {
            let pos = s / dt;
            let i = pos.floor().as_f64() as usize;
            let frac = pos - T::of(i as f64);
            f[i] + frac * (f[i + 1] - f[i])
        }
    };
    // piecewise-linear integrand: integrate between consecutive knots
    let mut knots = vec![a];
    let mut k = (a / dt).ceil().as_f64() as i64;
    while T::of(k as f64) * dt < b {
        let t = T::of(k as f64) * dt;
        if t > a {
            knots.push(t);
        }
        k += 1;
    }
    knots.push(b);
    let mut acc = T::zero();
    for w in knots.windows(2) {
        acc = acc + (w[1] - w[0]) * (value_at(w[0]) + value_at(w[1])) * T::of(0.5);
    }
    acc
}

/// Averaged time gradient `t0^{-1} int_0^{t0} (f_t - f_{t-r}) dr`, zero when
/// `t0 = 0`. The series lives on a uniform grid of spacing `dt`; values are
/// extended by the boundary values outside the grid.
pub fn time_grad_av<T: Scalar>(f: &[T], dt: T, t: T, t0: T) -> T {
    if t0 <= T::zero() {
        return T::zero();
    }
    let last = T::of((f.len() - 1) as f64) * dt;
    let f_t = if t <= T::zero() {
        f[0]
    } else if t >= last {
        f[f.len() - 1]
    } else {
        let pos = t / dt;
        let i = pos.floor().as_f64() as usize;
        let frac = pos - T::of(i as f64);
        f[i] + frac * (f[i + 1] - f[i])
    };
    let mean = integrate_series(f, dt, t - t0, t) / t0;
    f_t - mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FieldState;
    use crate::potential::{compute_constants, PolyTerm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn setup() -> (PotentialSpec<f64>, ModelConstants<f64>) {
        let spec = PotentialSpec::gaussian();
        let c = compute_constants(&spec, &[1.0]).unwrap();
        (spec, c)
    }

    #[test]
    fn default_scales_match_formulas() {
        let a = default_scales(64, 0.0);
        assert!((a.t_av - 1.0 / 16.0).abs() < 1e-14);
        assert_eq!(a.n_av, 64);
        let b = default_scales(1, 0.3);
        assert!((b.t_av - 1.0).abs() < 1e-14);
        assert_eq!(b.n_av, 1);
        // 1024^0.85 = 2^8.5 = 362.038..., rounded up
        let c = default_scales(1024, 0.1);
        assert_eq!(c.n_av, 363);
    }

    #[test]
    fn constant_function_passes_through_on_flat_field() {
        let (spec, c) = setup();
        let q = LocalFn::poly("const", 0, 0, vec![PolyTerm::new(2.5, vec![(1, 0, 0)])]);
        let phi = vec![0.0; 128];
        let cfg = AvConfig {
            t_av: 0.0,
            n_av: 32,
        };
        let v = av_space(&q, &phi, &spec, &c, 16, 7, &cfg).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn orientation_flip_mirrors_weights() {
        let (spec, c) = setup();
        // right window {1}: q = phi_1; left window {0}: q = phi_0
        let qr = LocalFn::poly("right", 0, 0, vec![PolyTerm::new(1.0, vec![(1, 1, 0)])]);
        let ql = LocalFn::poly("left", 0, 0, vec![PolyTerm::new(1.0, vec![(0, 1, 0)])]);
        let m = 32usize;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let phi: Vec<f64> = (0..m).map(|_| f64::std_normal(&mut rng)).collect();
        // mirror the field through the bond between x and x+1
        let x = 9i64;
        let mirrored: Vec<f64> = (0..m as i64)
            .map(|w| phi[wrap(2 * x + 1 - w, m)])
            .collect();
        let cfg = AvConfig { t_av: 0.0, n_av: 8 };
        let right = av_space(&qr, &phi, &spec, &c, 16, x, &cfg).unwrap();
        let left = av_space(&ql, &mirrored, &spec, &c, 16, x, &cfg).unwrap();
        assert!((right - left).abs() < 1e-12, "{right} vs {left}");
    }

    #[test]
    fn block_too_wide_is_an_error() {
        let (spec, c) = setup();
        let q = LocalFn::poly("q", 0, 0, vec![PolyTerm::new(1.0, vec![(1, 1, 0)])]);
        let phi = vec![0.0; 16];
        let cfg = AvConfig {
            t_av: 0.0,
            n_av: 16,
        };
        assert!(matches!(
            av_space(&q, &phi, &spec, &c, 16, 0, &cfg),
            Err(ColeHopfError::BlockTooWide { .. })
        ));
    }

    #[test]
    fn equilibrium_average_concentrates_like_a_clt() {
        // frozen-weight oracle: at lambda-weight 1 the average of the
        // centered square over n_av sites has sd ~ sqrt(2 / n_av); the
        // true weights perturb this at O(sqrt(n_av / N)) here
        let (spec, c) = setup();
        let q = LocalFn::poly(
            "centered-square",
            0,
            0,
            vec![
                PolyTerm::new(c.alpha, vec![(1, 2, 0)]),
                PolyTerm::new(-1.0, vec![]),
            ],
        );
        let n = 512u32;
        let m = 256usize;
        let cfg = AvConfig {
            t_av: 0.0,
            n_av: 64,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let reps = 4000;
        let mut vals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let phi: Vec<f64> = (0..m).map(|_| f64::std_normal(&mut rng)).collect();
            vals.push(av_space(&q, &phi, &spec, &c, n, 0, &cfg).unwrap());
        }
        let mean = crate::numerics::stats::mean(&vals);
        let sd = crate::numerics::stats::variance(&vals).sqrt();
        let oracle_sd = (2.0f64 / cfg.n_av as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (reps as f64).sqrt(), "mean {mean}");
        assert!(
            (sd - oracle_sd).abs() < 0.25 * oracle_sd,
            "sd {sd} vs oracle {oracle_sd}"
        );
    }

    #[test]
    fn zero_time_window_reduces_to_space_average() {
        let (spec, c) = setup();
        let q = LocalFn::poly("q", 0, 0, vec![PolyTerm::new(1.0, vec![(1, 2, 0)])]);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let phi: Vec<f64> = (0..64).map(|_| f64::std_normal(&mut rng)).collect();
        let state = FieldState::new(phi.clone());
        let mut history = History::new(4);
        history.push(&state);
        let cfg = AvConfig { t_av: 0.0, n_av: 8 };
        let a = av_spacetime(&q, &history, &spec, &c, 16, 3, &cfg).unwrap();
        let b = av_space(&q, &phi, &spec, &c, 16, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_constant_trajectory_reduces_to_space_average() {
        let (spec, c) = setup();
        let q = LocalFn::poly("q", 0, 0, vec![PolyTerm::new(1.0, vec![(1, 2, 0)])]);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let phi: Vec<f64> = (0..64).map(|_| f64::std_normal(&mut rng)).collect();
        // freeze the state but stamp increasing times; with R_lambda = 0 the
        // ratio weights are exactly 1
        let mut c0 = c.clone();
        c0.r_lambda = 0.0;
        let mut history = History::new(8);
        for k in 0..5 {
            let mut s = FieldState::new(phi.clone());
            s.t = 0.001 * k as f64;
            history.push(&s);
        }
        let cfg = AvConfig {
            t_av: 0.004,
            n_av: 8,
        };
        let a = av_spacetime(&q, &history, &spec, &c0, 16, 3, &cfg).unwrap();
        let b = av_space(&q, &phi, &spec, &c0, 16, 3, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn missing_history_is_an_error() {
        let (spec, c) = setup();
        let q = LocalFn::poly("q", 0, 0, vec![PolyTerm::new(1.0, vec![(1, 1, 0)])]);
        let mut history = History::new(4);
        let mut s = FieldState::new(vec![0.0; 32]);
        s.t = 1.0;
        history.push(&s);
        let cfg = AvConfig {
            t_av: 0.5,
            n_av: 4,
        };
        assert!(matches!(
            av_spacetime(&q, &history, &spec, &c, 16, 0, &cfg),
            Err(ColeHopfError::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn time_gradient_of_constant_vanishes() {
        let f = vec![2.0; 100];
        assert_eq!(time_grad_av(&f, 0.01, 0.5, 0.2), 0.0);
    }

    #[test]
    fn time_gradient_of_linear_ramp() {
        // f_t = t, t0 = 0.2, t = 0.5: gradient is t0/2 = 0.1
        let dt = 0.01;
        let f: Vec<f64> = (0..101).map(|i| i as f64 * dt).collect();
        let g = time_grad_av(&f, dt, 0.5, 0.2);
        assert!((g - 0.1).abs() < 1e-12, "{g}");
    }

    #[test]
    fn zero_window_gives_zero_gradient() {
        let f: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        assert_eq!(time_grad_av(&f, 0.1, 0.5, 0.0), 0.0);
    }
}
