//! Stochastic kernel columns coupled to the lattice noise.
//!
//! The plain mode evolves columns of
//!
//! ```text
//!   dB_{s,t,x,y} = c_N Delta B dt
//!                + chi_large(x) [kernel * (sqrt(2) lambda N^{1/2} R^ B dB_t)]_x,
//! ```
//!
//! the forced mode adds mesoscopic block-average forcing with surrogate
//! coefficients (overall scale `N`, weights `1/(|l_1|..|l_m|)`, `m <= 2`),
//! gated by a stopping-time indicator that freezes the forcing once a priori
//! field bounds are violated. The lattice dynamics and the kernels consume
//! the same increments, so the coupling is exact path by path.

use super::KernelError;
use crate::cole_hopf::{av_space, av_spacetime, cole_hopf_field, AvConfig, Mollifier};
use crate::lattice::{step_with_noise, FieldState, History, NoiseSource, SimConfig};
use crate::potential::{LocalFn, ModelConstants, PotentialSpec};
use crate::scalar::{ring_distance, wrap, Scalar};

/// Kernel flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// Heat operator plus mollified multiplicative noise only.
    Plain,
    /// Additionally the block-average forcing terms (experimental surrogate
    /// coefficients).
    Forced,
}

/// Configuration of a stochastic kernel run.
#[derive(Debug, Clone)]
pub struct StochKernelConfig<T> {
    /// Cutoff exponent of the forcing support `|x| <= N^{1+zeta}`.
    pub zeta: f64,
    /// Cutoff exponent of the noise support.
    pub zeta_large: f64,
    /// Weighted-norm exponent for the probes.
    pub kappa: f64,
    pub mode: KernelMode,
    /// Local functions driving the forcing (forced mode).
    pub forcing: Vec<LocalFn<T>>,
    /// Highest gradient-average order `m` in the forcing (<= 2).
    pub max_grad_order: u8,
    /// Freeze the forcing once the stopping-time thresholds trip.
    pub freeze_on_tap: bool,
    /// Averaging scales for the forcing terms.
    pub av: AvConfig,
    /// Steps between weighted-norm probes (0 disables).
    pub probe_stride: usize,
}

impl<T> StochKernelConfig<T> {
    pub fn plain(zeta: f64, zeta_large: f64, kappa: f64) -> Self {
        Self {
            zeta,
            zeta_large,
            kappa,
            mode: KernelMode::Plain,
            forcing: Vec::new(),
            max_grad_order: 0,
            freeze_on_tap: true,
            av: AvConfig { t_av: 0.0, n_av: 1 },
            probe_stride: 0,
        }
    }
}

/// Stopping-time monitor bundling the a priori bounds: it trips when
///
/// ```text
///   max_x N^{-delta_S} |phi_x| + max_x N^{delta_S/3} |R_x - 1| >= 1,
///   or max_n max_x |AvSpace_n|     >= N^{-1/2 + delta_S},
///   or max_n max_x |AvSpaceTime_n| >= N^{-1/2 + delta_S}.
/// ```
#[derive(Debug, Clone, Copy)]
pub struct TapMonitor {
    pub delta_s: f64,
    pub triggered_at: Option<f64>,
}

impl TapMonitor {
    pub fn new(delta_s: f64) -> Self {
        Self {
            delta_s,
            triggered_at: None,
        }
    }

    pub fn active(&self) -> bool {
        self.triggered_at.is_none()
    }

    pub fn update(&mut self, t: f64, n: u32, phi_max: f64, r_dev_max: f64, av_max: f64) {
        if self.triggered_at.is_some() {
            return;
        }
        let nf = f64::from(n);
        let field_part =
            nf.powf(-self.delta_s) * phi_max + nf.powf(self.delta_s / 3.0) * r_dev_max;
        let av_threshold = nf.powf(-0.5 + self.delta_s);
        if field_part >= 1.0 || av_max >= av_threshold {
            self.triggered_at = Some(t);
        }
    }
}

/// Result of a kernel run.
#[derive(Debug, Clone)]
pub struct KernelRun<T> {
    pub s: f64,
    pub t: f64,
    pub ys: Vec<usize>,
    /// `columns[i][x] = K_{s,t,x,ys[i]}`.
    pub columns: Vec<Vec<T>>,
    /// Stopping time, if it triggered during the run.
    pub tap: Option<f64>,
    /// Largest probed `sup_x sum_y e^{kappa d(x,y)/N} |K|` over the run
    /// (meaningful when the columns cover the whole ring).
    pub weighted_norm_max: f64,
    pub final_state: FieldState<T>,
}

/// Smoothed spatial cutoff `kernel * 1[d(., 0) <= N^{1+zeta}]`, clipped to
/// the ring (identically one when the box covers it).
pub fn chi_cutoff<T: Scalar>(m: usize, n: u32, zeta: f64, moll: &Mollifier<T>) -> Vec<T> {
    let radius = f64::from(n).powf(1.0 + zeta);
    if radius >= (m / 2) as f64 {
        return vec![T::one(); m];
    }
    let r = radius.floor() as i64;
    let indicator: Vec<T> = (0..m as i64)
        .map(|x| {
            if ring_distance(x, 0, m) <= r {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    moll.convolve(&indicator)
}

/// Gradient-average operator `A g_x = sum_{0 < |l| <= n_av} (g_{x+l} - g_x)/|l|`.
fn grad_average<T: Scalar>(g: &[T], n_av: usize) -> Vec<T> {
    let m = g.len();
    let mut out = vec![T::zero(); m];
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for l in 1..=(n_av as i64) {
            let w = T::of(1.0 / l as f64);
            acc = acc
                + w * (g[wrap(x as i64 + l, m)] + g[wrap(x as i64 - l, m)]
                    - g[x]
                    - g[x]);
        }
        *o = acc;
    }
    out
}

/// Evolve kernel columns in lockstep with the field dynamics.
///
/// `phi0` is the state at the kernel's start time `s`; columns get delta
/// initial data at the sites `ys`. The same noise increments drive the field
/// and every column.
#[allow(clippy::too_many_arguments)]
pub fn run_stoch_kernel<T: Scalar>(
    phi0: &FieldState<T>,
    spec: &PotentialSpec<T>,
    constants: &ModelConstants<T>,
    cfg: &SimConfig,
    skcfg: &StochKernelConfig<T>,
    moll: &Mollifier<T>,
    ys: &[usize],
    steps: usize,
    source: &mut dyn NoiseSource<T>,
) -> Result<KernelRun<T>, KernelError> {
    let m = phi0.m();
    moll.check_ring(m)?;
    if skcfg.max_grad_order > 2 {
        return Err(KernelError::BadKernelConfig(
            "gradient-average order must be <= 2".into(),
        ));
    }
    let n = cfg.n;
    let nf = T::of(f64::from(n));
    let dt = cfg.dt(spec, constants);
    let c_n = constants.c_n(n);
    let lambda = constants.lambda;
    let noise_scale = T::of(2.0).sqrt() * lambda * nf.sqrt();
    let chi_large = chi_cutoff(m, n, skcfg.zeta_large, moll);
    let chi = chi_cutoff(m, n, skcfg.zeta, moll);
    let forced = skcfg.mode == KernelMode::Forced && !skcfg.forcing.is_empty();

    let mut state = phi0.clone();
    let mut columns: Vec<Vec<T>> = ys
        .iter()
        .map(|&y| {
            let mut col = vec![T::zero(); m];
            col[y] = T::one();
            col
        })
        .collect();

    let mut tap = TapMonitor::new(moll.delta_s);
    // per-step history of the field for the backwards time averages
    let hist_cap = if forced {
        (skcfg.av.t_av / dt.as_f64()).ceil() as usize + 3
    } else {
        2
    };
    let mut history: History<T> = History::new(hist_cap.max(2));
    history.push(&state);
    // per (forcing entry, column): series of smoothed space-average fields
    // feeding the averaged time gradient
    let tg_len = if forced {
        (skcfg.av.t_av / dt.as_f64()).ceil() as usize + 2
    } else {
        0
    };
    let mut tg_series: Vec<Vec<std::collections::VecDeque<Vec<T>>>> = if forced {
        vec![vec![std::collections::VecDeque::new(); columns.len()]; skcfg.forcing.len()]
    } else {
        Vec::new()
    };

    let mut noise = vec![T::zero(); m];
    let mut weighted_norm_max = 0.0f64;
    let probe = |cols: &Vec<Vec<T>>| -> f64 {
        let kappa = skcfg.kappa;
        let mut worst = 0.0f64;
        for x in 0..m as i64 {
            let mut acc = 0.0f64;
            for (i, &y) in ys.iter().enumerate() {
                let d = ring_distance(x, y as i64, m) as f64;
                acc += (kappa * d / f64::from(n)).exp() * cols[i][x as usize].abs().as_f64();
            }
            worst = worst.max(acc);
        }
        worst
    };

    for s in 0..steps {
        let fields = cole_hopf_field(&state, n, constants, moll)?;
        // stopping-time diagnostics from the current slice
        let phi_max = state
            .phi
            .iter()
            .fold(0.0f64, |a, &b| a.max(b.abs().as_f64()));
        let r_dev = fields
            .r
            .iter()
            .fold(0.0f64, |a, &b| a.max((b - T::one()).abs().as_f64()));
        // forcing fields at the current slice
        let mut forcing_avtx: Vec<Vec<T>> = Vec::new();
        let mut forcing_avx: Vec<Vec<T>> = Vec::new();
        let mut av_max = 0.0f64;
        if forced {
            for q in &skcfg.forcing {
                let mut avtx = Vec::with_capacity(m);
                let mut avx = Vec::with_capacity(m);
                for x in 0..m as i64 {
                    let vtx = av_spacetime(q, &history, spec, constants, n, x, &skcfg.av)?;
                    let vx = av_space(q, &state.phi, spec, constants, n, x, &skcfg.av)?;
                    av_max = av_max.max(vtx.abs().as_f64()).max(vx.abs().as_f64());
                    avtx.push(vtx);
                    avx.push(vx);
                }
                forcing_avtx.push(avtx);
                forcing_avx.push(avx);
            }
        }
        tap.update(state.t.as_f64(), n, phi_max, r_dev, av_max);
        let gate = if skcfg.freeze_on_tap && !tap.active() {
            T::zero()
        } else {
            T::one()
        };

        source.fill(&mut noise)?;

        // column updates from the pre-step slice
        let two = T::of(2.0);
        for (ci, col) in columns.iter_mut().enumerate() {
            // mollified multiplicative noise
            let weighted: Vec<T> = (0..m)
                .map(|x| fields.r_cut[x] * col[x] * noise[x])
                .collect();
            let smoothed = moll.convolve(&weighted);
            // forcing
            let mut force = vec![T::zero(); m];
            if forced {
                for (qi, _) in skcfg.forcing.iter().enumerate() {
                    // gated smoothed product with the backwards time average
                    let prod: Vec<T> = (0..m)
                        .map(|x| forcing_avtx[qi][x] * fields.r[x] * col[x])
                        .collect();
                    let g = moll.convolve(&prod);
                    let mut acc = g.clone();
                    let mut power = g.clone();
                    for _ in 0..skcfg.max_grad_order {
                        power = grad_average(&power, skcfg.av.n_av);
                        for (a, p) in acc.iter_mut().zip(&power) {
                            *a = *a + *p;
                        }
                    }
                    for (f, a) in force.iter_mut().zip(&acc) {
                        *f = *f + gate * *a;
                    }
                    // averaged time gradient of the gated space-average field
                    let prod_x: Vec<T> = (0..m)
                        .map(|x| gate * forcing_avx[qi][x] * fields.r[x] * col[x])
                        .collect();
                    let gx = moll.convolve(&prod_x);
                    let series = &mut tg_series[qi][ci];
                    if series.len() == tg_len {
                        series.pop_front();
                    }
                    series.push_back(gx);
                    if series.len() >= 2 {
                        let t_av = T::of(skcfg.av.t_av);
                        let latest = series.len() - 1;
                        let mut tg = Vec::with_capacity(m);
                        for x in 0..m {
                            let f_series: Vec<T> =
                                series.iter().map(|slice| slice[x]).collect();
                            tg.push(crate::cole_hopf::time_grad_av(
                                &f_series,
                                dt,
                                T::of(latest as f64) * dt,
                                t_av,
                            ));
                        }
                        let mut acc = tg.clone();
                        let mut power = tg;
                        for _ in 0..skcfg.max_grad_order {
                            power = grad_average(&power, skcfg.av.n_av);
                            for (a, p) in acc.iter_mut().zip(&power) {
                                *a = *a + *p;
                            }
                        }
                        for (f, a) in force.iter_mut().zip(&acc) {
                            *f = *f + *a;
                        }
                    }
                }
            }
            // assemble the step
            let mut next = Vec::with_capacity(m);
            for x in 0..m {
                let xr = (x + 1) % m;
                let xl = (x + m - 1) % m;
                let lap = col[xr] + col[xl] - two * col[x];
                let mut v = col[x] + dt * c_n * lap + chi_large[x] * noise_scale * smoothed[x];
                if forced {
                    v = v + dt * nf * chi[x] * force[x];
                }
                if !v.is_finite() {
                    return Err(KernelError::KernelBlowUp {
                        t: state.t.as_f64(),
                        site: x,
                    });
                }
                next.push(v);
            }
            *col = next;
        }

        // advance the field with the same increments
        step_with_noise(&mut state, spec, constants, cfg, dt, &noise)?;
        if forced {
            history.push(&state);
        }
        if skcfg.probe_stride > 0 && (s + 1) % skcfg.probe_stride == 0 {
            weighted_norm_max = weighted_norm_max.max(probe(&columns));
        }
    }
    if skcfg.probe_stride > 0 {
        weighted_norm_max = weighted_norm_max.max(probe(&columns));
    }
    Ok(KernelRun {
        s: phi0.t.as_f64(),
        t: state.t.as_f64(),
        ys: ys.to_vec(),
        columns,
        tap: tap.triggered_at,
        weighted_norm_max,
        final_state: state,
    })
}

/// Sup-norm Chapman-Kolmogorov residual
/// `max_{x,y} |K_{s,t}(x,y) - sum_w K_{r,t}(x,w) K_{s,r}(w,y)|`
/// for full-ring column sets (`columns[y][x]` indexing).
pub fn chapman_kolmogorov_residual<T: Scalar>(
    direct: &[Vec<T>],
    first: &[Vec<T>],
    second: &[Vec<T>],
) -> Result<T, KernelError> {
    let m = direct.len();
    if first.len() != m || second.len() != m || direct.iter().any(|c| c.len() != m) {
        return Err(KernelError::ShapeMismatch {
            expected: m,
            got: first.len().min(second.len()),
        });
    }
    let mut worst = T::zero();
    for y in 0..m {
        for x in 0..m {
            let mut acc = T::zero();
            for w in 0..m {
                acc = acc + second[w][x] * first[y][w];
            }
            worst = worst.max((direct[y][x] - acc).abs());
        }
    }
    Ok(worst)
}

/// Propagate data through a full column set: `out_x = sum_y K(x, y) f_y`.
pub fn apply_columns<T: Scalar>(columns: &[Vec<T>], data: &[T]) -> Result<Vec<T>, KernelError> {
    if columns.len() != data.len() {
        return Err(KernelError::ShapeMismatch {
            expected: columns.len(),
            got: data.len(),
        });
    }
    let m = columns[0].len();
    let mut out = vec![T::zero(); m];
    for (col, &f) in columns.iter().zip(data) {
        for (o, &k) in out.iter_mut().zip(col) {
            *o = *o + k * f;
        }
    }
    Ok(out)
}
