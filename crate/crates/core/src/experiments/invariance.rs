//! Statistical invariance of the product measure under the ring dynamics.
//!
//! Replicas start in the product ensemble, evolve to the horizon, and the
//! pooled site marginals are tested against the quadrature CDF by a
//! Kolmogorov-Smirnov test; inter-site correlations at short lags must stay
//! within normal-order bounds, and a tilted ensemble must keep its mean.

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::lattice::{init_equilibrium, run, FreshNoise, SimConfig};
use crate::numerics::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// KS acceptance threshold.
pub const KS_P_MIN: f64 = 0.01;
/// Correlation bound in units of the standard error.
pub const CORR_SE_BOUND: f64 = 4.0;

pub fn exp_invariance(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let mut cells = Vec::new();
    for &n in &xspec.n_grid {
        let cfg = SimConfig {
            n,
            m: xspec.ring_size(n),
            theta: xspec.theta,
            horizon: xspec.horizon,
            seed: xspec.seed,
            observer_stride: 0,
            history_stride: 0,
        };
        let max_window = 2 * model.constants.deg + 1;
        cfg.validate(&model.constants, max_window)?;

        let finals: Vec<Result<Vec<f64>, ExperimentError>> = (0..xspec.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
                rng.set_stream(r);
                let mut state = init_equilibrium(&model.ens, &cfg, &mut rng)?;
                let dt = cfg.dt(&model.spec, &model.constants);
                let mut source = FreshNoise::new(rng, dt);
                run(
                    &mut state,
                    &model.spec,
                    &model.constants,
                    &cfg,
                    &mut source,
                    |_, _| {},
                )?;
                Ok(state.phi)
            })
            .collect();
        let mut pooled = Vec::with_capacity(xspec.replicas * cfg.m);
        let mut per_replica = Vec::with_capacity(xspec.replicas);
        for f in finals {
            let phi = f?;
            pooled.extend_from_slice(&phi);
            per_replica.push(phi);
        }

        // pooled KS against the quadrature CDF
        let cdf = model.marginal_cdf();
        let mut sample = pooled.clone();
        let (d, p) = stats::ks_test(&mut sample, &cdf);
        let n_pool = pooled.len() as f64;
        let mut cell_stats = vec![
            Stat::new("ks_statistic", d, 1.0 / n_pool.sqrt()),
            Stat::new("ks_p", p, 0.0).with_pass(p > KS_P_MIN),
        ];

        // cross-site correlations at short lags
        for lag in 1..=3usize {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for phi in &per_replica {
                for x in 0..cfg.m {
                    xs.push(phi[x]);
                    ys.push(phi[(x + lag) % cfg.m]);
                }
            }
            let r = stats::correlation(&xs, &ys);
            let se = 1.0 / (xs.len() as f64).sqrt();
            cell_stats.push(
                Stat::new(format!("corr_lag{lag}"), r, se)
                    .with_pass(r.abs() < CORR_SE_BOUND * se),
            );
        }

        // mean preservation (binding for tilted ensembles)
        let mean = stats::mean(&pooled);
        let se = (model.ens.variance() / n_pool).sqrt();
        cell_stats.push(
            Stat::new("mean_drift", mean - xspec.sigma, se)
                .with_pass((mean - xspec.sigma).abs() < CORR_SE_BOUND * se),
        );

        cells.push(Cell::new(format!("n{n}_t{}", xspec.horizon), cell_stats));
    }
    Ok(Report::new(xspec, cells))
}
