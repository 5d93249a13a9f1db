//! Coupled comparison of the exponentiated height field `Z` with the
//! multiplicative-noise heat field `Q` driven by the same increments: the
//! sup-discrepancy over a macroscopic window must shrink as the scaling
//! parameter grows, and must not shrink for the broken (independent-noise)
//! control.

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::kernels::heat_kernel;
use crate::lattice::{init_equilibrium, step_with_noise, SimConfig};
use crate::numerics::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Required overall decrease of the median discrepancy across the grid.
pub const MIN_TOTAL_DECREASE: f64 = 0.25;

fn sup_window(z: &[f64], q: &[f64], m: usize, n: u32) -> f64 {
    // |x| <= N in the signed ring coordinate
    let half = n as i64;
    let mut worst = 0.0f64;
    for idx in 0..m as i64 {
        let x = if idx <= (m / 2) as i64 {
            idx
        } else {
            idx - m as i64
        };
        if x.abs() <= half {
            worst = worst.max((z[idx as usize] - q[idx as usize]).abs());
        }
    }
    worst
}

fn one_replica(
    model: &Model,
    cfg: &SimConfig,
    stream: u64,
    coupled: bool,
) -> Result<f64, ExperimentError> {
    let m = cfg.m;
    let n = cfg.n;
    let lambda = model.constants.lambda;
    let r_lambda = model.constants.r_lambda;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut state = init_equilibrium(&model.ens0, cfg, &mut rng)?;
    // exponentiated field at time zero
    let z_of = |state: &crate::lattice::FieldState<f64>| -> Vec<f64> {
        let scale = (n as f64).sqrt().recip();
        let mut acc = state.j0;
        let drift = lambda * r_lambda * state.t;
        let mut z = Vec::with_capacity(m);
        z.push((lambda * acc - drift).exp());
        for x in 1..m {
            acc += scale * state.phi[x];
            z.push((lambda * acc - drift).exp());
        }
        z
    };
    let z0 = z_of(&state);
    let mut q = z0;
    let dt: f64 = cfg.dt(&model.spec, &model.constants);
    let steps = cfg.steps(&model.spec, &model.constants);
    let half = heat_kernel(&model.constants, n, m, 0.0, dt * 0.5)?;
    let noise_scale = std::f64::consts::SQRT_2 * lambda * (n as f64).sqrt();
    let compensator = lambda * lambda * n as f64 * dt;
    let mut buf = vec![0.0; m];
    // independent stream for the broken-coupling control
    let mut control_rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x636f_6e74_726f_6c00);
    control_rng.set_stream(stream);
    let sqrt_dt = dt.sqrt();
    let mut worst = 0.0f64;
    let stride = 16usize;
    for s in 0..steps {
        for b in buf.iter_mut() {
            *b = sqrt_dt * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        // Q update (same increments when coupled, fresh otherwise)
        q = half.apply(&q)?;
        if coupled {
            for (qv, &db) in q.iter_mut().zip(&buf) {
                *qv *= (noise_scale * db - compensator).exp();
            }
        } else {
            for qv in q.iter_mut() {
                let db: f64 = sqrt_dt * control_rng.sample::<f64, _>(rand_distr::StandardNormal);
                *qv *= (noise_scale * db - compensator).exp();
            }
        }
        q = half.apply(&q)?;
        // field update with the same increments
        step_with_noise(&mut state, &model.spec, &model.constants, cfg, dt, &buf)?;
        if (s + 1) % stride == 0 || s + 1 == steps {
            let z = z_of(&state);
            worst = worst.max(sup_window(&z, &q, m, n));
        }
    }
    Ok(worst)
}

pub fn exp_she_comparison(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let mut cells = Vec::new();
    let mut medians = Vec::new();
    let mut control_medians = Vec::new();
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
        cfg.validate(&model.constants, 2 * model.constants.deg + 1)?;
        for coupled in [true, false] {
            let sups: Vec<Result<f64, ExperimentError>> = (0..xspec.replicas as u64)
                .into_par_iter()
                .map(|r| one_replica(&model, &cfg, r, coupled))
                .collect();
            let mut vals = Vec::with_capacity(xspec.replicas);
            for s in sups {
                vals.push(s?);
            }
            let med = stats::median(&vals);
            // rough SE of the median
            let se = 1.2533 * stats::std_error(&vals);
            let tag = if coupled { "coupled" } else { "control" };
            cells.push(Cell::new(
                format!("{tag}/n{n}"),
                vec![
                    Stat::new("median_sup", med, se),
                    Stat::new("q90_sup", stats::quantile(&vals, 0.9), se),
                ],
            ));
            if coupled {
                medians.push(med);
            } else {
                control_medians.push(med);
            }
        }
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let total_drop = if medians.len() >= 2 {
        1.0 - medians.last().unwrap() / medians.first().unwrap()
    } else {
        0.0
    };
    let coupled_pass = decreasing && total_drop >= MIN_TOTAL_DECREASE;
    let control_decreasing = control_medians.windows(2).all(|w| w[1] < w[0]);
    let control_drop = if control_medians.len() >= 2 {
        1.0 - control_medians.last().unwrap() / control_medians.first().unwrap()
    } else {
        0.0
    };
    let control_pass = control_decreasing && control_drop >= MIN_TOTAL_DECREASE;
    cells.push(Cell::new(
        "verdict",
        vec![
            Stat::new("coupled_total_decrease", total_drop, 0.0).with_pass(coupled_pass),
            Stat::new("control_total_decrease", control_drop, 0.0).with_pass(!control_pass),
        ],
    ));
    Ok(Report::new(xspec, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn coupled_discrepancy_is_small_and_control_is_not() {
        let spec = ExperimentSpec {
            experiment: ExperimentKind::CompareShe,
            n_grid: vec![16],
            horizon: 0.02,
            replicas: 8,
            seed: 13,
            ..Default::default()
        };
        let report = exp_she_comparison(&spec).unwrap();
        let coupled = report.cell("coupled/n16").unwrap().stat("median_sup").unwrap();
        let control = report.cell("control/n16").unwrap().stat("median_sup").unwrap();
        assert!(
            coupled.value * 3.0 < control.value,
            "coupled {} vs control {}",
            coupled.value,
            control.value
        );
    }
}
