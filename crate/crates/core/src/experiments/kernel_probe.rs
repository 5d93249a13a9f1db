//! Kernel diagnostics: stochasticity and semigroup identities of the
//! deterministic kernel, weighted-norm envelopes, the martingale mean of the
//! stochastic columns, Chapman-Kolmogorov refinement, and the weighted-norm
//! growth bound of the plain stochastic kernel.

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::cole_hopf::Mollifier;
use crate::kernels::{
    chapman_kolmogorov_residual, heat_kernel, hk_probe, run_stoch_kernel, StochKernelConfig,
};
use crate::lattice::{init_equilibrium, NoiseTape, RecordingNoise, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Tolerance on row sums of the deterministic kernel.
pub const ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance on the semigroup composition residual.
pub const SEMIGROUP_TOL: f64 = 1e-10;
/// Allowed spread factor of the weighted-l2 envelope constant.
pub const ENVELOPE_SPREAD: f64 = 2.0;
/// Weighted-norm growth allowance: `10 N^{0.1}`.
pub fn norm_bound(n: u32) -> f64 {
    10.0 * f64::from(n).powf(0.1)
}

pub fn exp_kernel_probe(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let n = *xspec.n_grid.first().unwrap();
    let m = xspec.ring_size(n).max(8 * n as usize);
    let mut cells = Vec::new();

    // deterministic kernel identities over a dyadic sweep; the window keeps
    // the kernel a few sites wide, clear of the ring wrap, and inside the
    // regime where the exponential weight has not overtaken the decay
    // (kappa * width / N < 1)
    {
        let c_n: f64 = model.constants.c_n(n);
        let kappa = xspec.kappa_or_default();
        let nf = f64::from(n);
        let tau_lo = 4.0 / (nf * nf);
        let tau_hi = ((m * m) as f64 / (72.0 * c_n)).min(nf * nf / (8.0 * c_n * kappa * kappa));
        let mut tau = tau_lo;
        let mut worst_row = 0.0f64;
        let mut envelope = Vec::new();
        while tau <= tau_hi {
            let k = heat_kernel(&model.constants, n, m, 0.0, tau)?;
            worst_row = worst_row.max((k.row_sum() - 1.0).abs());
            let p = hk_probe(&k, 1.0, 0);
            envelope.push(f64::from(n) * tau.sqrt() * p.weighted_l2);
            tau *= 2.0;
        }
        let k1 = heat_kernel(&model.constants, n, m, 0.0, tau_lo * 3.0)?;
        let k2 = heat_kernel(&model.constants, n, m, tau_lo * 3.0, tau_lo * 11.0)?;
        let direct = heat_kernel(&model.constants, n, m, 0.0, tau_lo * 11.0)?;
        let composed = k2.compose(&k1)?;
        let semigroup_resid = composed
            .row
            .iter()
            .zip(&direct.row)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let spread = envelope.iter().cloned().fold(f64::MIN, f64::max)
            / envelope.iter().cloned().fold(f64::MAX, f64::min);
        cells.push(Cell::new(
            "deterministic",
            vec![
                Stat::new("max_row_sum_error", worst_row, 0.0)
                    .with_pass(worst_row <= ROW_SUM_TOL),
                Stat::new("semigroup_residual", semigroup_resid, 0.0)
                    .with_pass(semigroup_resid <= SEMIGROUP_TOL),
                Stat::new("weighted_l2_envelope_spread", spread, 0.0)
                    .with_pass(spread < ENVELOPE_SPREAD),
            ],
        ));
    }

    // martingale mean of the plain stochastic column (fixed small scale:
    // the identity is scale-free and the replica count is what matters)
    {
        let mean_n = 16u32;
        let mean_m = 64usize;
        let cfg = SimConfig {
            n: mean_n,
            m: mean_m,
            theta: xspec.theta,
            horizon: 0.0,
            seed: xspec.seed,
            observer_stride: 0,
            history_stride: 8,
        };
        let dt: f64 = cfg.dt(&model.spec, &model.constants);
        let steps = ((0.005 / dt).round() as usize).clamp(100, 2000);
        let y = mean_m / 2;
        let skcfg = StochKernelConfig::plain(0.5, 1.0, xspec.kappa_or_default());
        let moll = Mollifier::bump(n, xspec.delta_s);
        let replicas = xspec.replicas.max(1000);
        let acc: Vec<Result<Vec<f64>, ExperimentError>> = (0..replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
                rng.set_stream(r);
                let state = init_equilibrium(&model.ens0, &cfg, &mut rng)?;
                let mut src = crate::lattice::FreshNoise::new(rng, dt);
                let run = run_stoch_kernel(
                    &state,
                    &model.spec,
                    &model.constants,
                    &cfg,
                    &skcfg,
                    &moll,
                    &[y],
                    steps,
                    &mut src,
                )?;
                Ok(run.columns.into_iter().next().unwrap())
            })
            .collect();
        let mut mean = vec![0.0f64; m];
        let mut sq = vec![0.0f64; m];
        for a in acc {
            let col = a?;
            for (x, v) in col.into_iter().enumerate() {
                mean[x] += v;
                sq[x] += v * v;
            }
        }
        let rf = replicas as f64;
        let expect = heat_kernel(&model.constants, n, m, 0.0, dt * steps as f64)?.column(y);
        let mut worst_dev_se = 0.0f64;
        for x in 0..m {
            let mu = mean[x] / rf;
            let var = (sq[x] / rf - mu * mu).max(0.0);
            let se = (var / rf).sqrt() + 1e-12;
            worst_dev_se = worst_dev_se.max((mu - expect[x]).abs() / se);
        }
        cells.push(Cell::new(
            "column-mean",
            vec![Stat::new("max_deviation_in_se", worst_dev_se, 1.0)
                .with_pass(worst_dev_se <= 4.0)],
        ));
    }

    // Chapman-Kolmogorov residual under step refinement, averaged over
    // independent noise tapes (a single realization's ordering is noisy)
    {
        let small_m = 32usize.min(m);
        let cfg = SimConfig {
            n: 8,
            m: small_m,
            theta: 0.05,
            horizon: 0.0,
            seed: xspec.seed,
            observer_stride: 0,
            history_stride: 8,
        };
        let dt: f64 = cfg.dt(&model.spec, &model.constants);
        let steps = 128usize;
        let skcfg = StochKernelConfig::plain(0.5, 1.0, xspec.kappa_or_default());
        let moll = Mollifier::bump(cfg.n, xspec.delta_s);
        let ys: Vec<usize> = (0..small_m).collect();
        let reps = 8u64;
        let resids: Vec<Result<(f64, f64), ExperimentError>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed ^ 0x636b);
                rng.set_stream(r);
                let state0 = init_equilibrium(&model.ens0, &cfg, &mut rng)?;
                let mut tape = NoiseTape::with_capacity(small_m, dt, steps);
                {
                    let mut rec = RecordingNoise::new(rng, &mut tape);
                    run_stoch_kernel(
                        &state0, &model.spec, &model.constants, &cfg, &skcfg, &moll, &[0],
                        steps, &mut rec,
                    )?;
                }
                let first = {
                    let mut src = tape.replay(0);
                    run_stoch_kernel(
                        &state0, &model.spec, &model.constants, &cfg, &skcfg, &moll, &ys,
                        steps / 2, &mut src,
                    )?
                };
                let second = {
                    let mut src = tape.replay(steps / 2);
                    run_stoch_kernel(
                        &first.final_state, &model.spec, &model.constants, &cfg, &skcfg,
                        &moll, &ys, steps / 2, &mut src,
                    )?
                };
                let mut out = [0.0f64; 2];
                for (i, factor) in [4usize, 2].into_iter().enumerate() {
                    let coarse_cfg = SimConfig {
                        theta: cfg.theta * factor as f64,
                        ..cfg
                    };
                    let mut src = tape.replay_coarse(0, factor);
                    let coarse = run_stoch_kernel(
                        &state0, &model.spec, &model.constants, &coarse_cfg, &skcfg, &moll,
                        &ys, steps / factor, &mut src,
                    )?;
                    out[i] = chapman_kolmogorov_residual(
                        &coarse.columns,
                        &first.columns,
                        &second.columns,
                    )?;
                }
                Ok((out[0], out[1]))
            })
            .collect();
        let mut r4 = Vec::with_capacity(reps as usize);
        let mut r2 = Vec::with_capacity(reps as usize);
        for r in resids {
            let (a, b) = r?;
            r4.push(a);
            r2.push(b);
        }
        let mean4 = crate::numerics::stats::mean(&r4);
        let mean2 = crate::numerics::stats::mean(&r2);
        cells.push(Cell::new(
            "chapman-kolmogorov",
            vec![
                Stat::new("residual_4dt", mean4, crate::numerics::stats::std_error(&r4)),
                Stat::new("residual_2dt", mean2, crate::numerics::stats::std_error(&r2))
                    .with_pass(mean2 < mean4),
            ],
        ));
    }

    // weighted-norm growth of the plain kernel over a full-ring run
    {
        let probe_n = n.min(32);
        let probe_m = 4 * probe_n as usize;
        let cfg = SimConfig {
            n: probe_n,
            m: probe_m,
            theta: xspec.theta,
            horizon: 0.0,
            seed: xspec.seed,
            observer_stride: 0,
            history_stride: 8,
        };
        let dt: f64 = cfg.dt(&model.spec, &model.constants);
        let steps = (0.05 / dt).round() as usize;
        let mut skcfg = StochKernelConfig::plain(0.5, 1.0, xspec.kappa_or_default());
        skcfg.probe_stride = (steps / 16).max(1);
        let moll = Mollifier::bump(probe_n, xspec.delta_s);
        let ys: Vec<usize> = (0..probe_m).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed ^ 0x6e6f726d);
        let state = init_equilibrium(&model.ens0, &cfg, &mut rng)?;
        let mut src = crate::lattice::FreshNoise::new(rng, dt);
        let run = run_stoch_kernel(
            &state,
            &model.spec,
            &model.constants,
            &cfg,
            &skcfg,
            &moll,
            &ys,
            steps,
            &mut src,
        )?;
        let bound = norm_bound(probe_n);
        cells.push(Cell::new(
            "weighted-norm",
            vec![
                Stat::new("max_weighted_row_norm", run.weighted_norm_max, 0.0)
                    .with_pass(run.weighted_norm_max <= bound),
                Stat::new("bound", bound, 0.0),
            ],
        ));
    }

    Ok(Report::new(xspec, cells))
}

impl ExperimentSpec {
    /// Weighted-norm exponent used by the kernel probes.
    pub fn kappa_or_default(&self) -> f64 {
        1.0
    }
}
