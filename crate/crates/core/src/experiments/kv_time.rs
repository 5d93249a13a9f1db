//! Time-averaging gain: the variance of the backwards space-time block
//! average against the fast dynamics must decay with slope -1 in the window
//! length (the Kipnis-Varadhan mechanism), before saturation.

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::cole_hopf::{av_space, av_spacetime, default_scales, AvConfig};
use crate::lattice::{init_equilibrium, History, SimConfig};
use crate::numerics::stats;
use crate::potential::{LocalFn, PolyTerm};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Acceptance band for the fitted slope.
pub const SLOPE_BAND: (f64, f64) = (-1.25, -0.75);
/// Keep fitting while the variance still drops by this factor per dyadic
/// step; flat cells mark saturation.
pub const SATURATION_DROP: f64 = 0.9;
pub const BOOTSTRAP_RESAMPLES: usize = 400;

/// Default dyadic window grid in units of `N^{-2}`.
fn default_windows() -> Vec<f64> {
    vec![10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0, 1000.0]
}

pub fn exp_kv_time(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let n = *xspec.n_grid.first().unwrap();
    let m = xspec.ring_size(n).max(8 * n as usize);
    let windows_scaled = if xspec.time_grid.is_empty() {
        default_windows()
    } else {
        xspec.time_grid.clone()
    };
    let n2 = f64::from(n) * f64::from(n);
    let windows: Vec<f64> = windows_scaled.iter().map(|w| w / n2).collect();
    let t_max = windows.iter().cloned().fold(0.0, f64::max);

    let cfg = SimConfig {
        n,
        m,
        theta: xspec.theta,
        horizon: t_max,
        seed: xspec.seed,
        observer_stride: 0,
        history_stride: 0,
    };
    let max_window = 2 * model.constants.deg + 1;
    cfg.validate(&model.constants, max_window)?;
    let dt: f64 = cfg.dt(&model.spec, &model.constants);
    let steps = cfg.steps(&model.spec, &model.constants);
    // history stride: dense enough to resolve the smallest window
    let min_window = windows.iter().cloned().fold(f64::MAX, f64::min);
    let stride = ((min_window / dt) / 8.0).floor().max(1.0) as usize;
    let capacity = steps / stride + 2;

    // fixed spatial block from the default mesoscopic scales
    let block = default_scales(n, xspec.delta_s).n_av;
    let q = LocalFn::poly(
        "centered-square",
        0,
        0,
        vec![
            PolyTerm::new(model.constants.alpha, vec![(1, 2, 0)]),
            PolyTerm::new(-1.0, vec![]),
        ],
    );
    let probes: Vec<i64> = vec![0, (m / 2) as i64];

    type ReplicaOut = (Vec<Vec<f64>>, Vec<f64>);
    let per_replica: Vec<Result<ReplicaOut, ExperimentError>> = (0..xspec.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
            rng.set_stream(r);
            let mut state = init_equilibrium(&model.ens0, &cfg, &mut rng)?;
            let mut history = History::new(capacity);
            history.push(&state);
            let mut source = crate::lattice::FreshNoise::new(rng, dt);
            let mut buf = vec![0.0; m];
            for s in 0..steps {
                crate::lattice::step(
                    &mut state,
                    &model.spec,
                    &model.constants,
                    &cfg,
                    dt,
                    &mut source,
                    &mut buf,
                )?;
                if (s + 1) % stride == 0 || s + 1 == steps {
                    history.push(&state);
                }
            }
            // nested windows measured on the same trajectory end point
            let mut per_window: Vec<Vec<f64>> = Vec::with_capacity(windows.len());
            for &w in &windows {
                let cfg_av = AvConfig {
                    t_av: w,
                    n_av: block,
                };
                let mut vals = Vec::with_capacity(probes.len());
                for &x in &probes {
                    vals.push(av_spacetime(
                        &q,
                        &history,
                        &model.spec,
                        &model.constants,
                        n,
                        x,
                        &cfg_av,
                    )?);
                }
                per_window.push(vals);
            }
            // instantaneous space average for the small-window ratio
            let cfg_av = AvConfig {
                t_av: 0.0,
                n_av: block,
            };
            let mut inst = Vec::with_capacity(probes.len());
            for &x in &probes {
                inst.push(av_space(
                    &q,
                    &state.phi,
                    &model.spec,
                    &model.constants,
                    n,
                    x,
                    &cfg_av,
                )?);
            }
            Ok((per_window, inst))
        })
        .collect();

    let mut window_samples: Vec<Vec<f64>> = vec![Vec::new(); windows.len()];
    let mut inst_samples: Vec<f64> = Vec::new();
    for r in per_replica {
        let (per_window, inst) = r?;
        for (i, vals) in per_window.into_iter().enumerate() {
            window_samples[i].extend(vals);
        }
        inst_samples.extend(inst);
    }

    let mut cells = Vec::new();
    let mut vars = Vec::with_capacity(windows.len());
    let rel_se = (2.0 / (window_samples[0].len() as f64 - 1.0)).sqrt();
    for (i, &w) in windows.iter().enumerate() {
        let var = stats::variance(&window_samples[i]);
        vars.push(var);
        let mut cell_stats = vec![Stat::new("var_avtx", var, var * rel_se)];
        if i == 0 {
            let var_inst = stats::variance(&inst_samples);
            cell_stats.push(Stat::new(
                "var_ratio_to_space_average",
                var / var_inst,
                2.0 * rel_se * var / var_inst,
            ));
        }
        cells.push(Cell::new(format!("window{:.6e}", w), cell_stats));
    }

    // fit only while the variance keeps dropping (>= 10% per dyadic step)
    let mut fit_upto = 1usize;
    while fit_upto < vars.len() && vars[fit_upto] <= SATURATION_DROP * vars[fit_upto - 1] {
        fit_upto += 1;
    }
    let crossover = if fit_upto < windows.len() {
        windows[fit_upto]
    } else {
        f64::INFINITY
    };
    if fit_upto < 3 {
        return Err(ExperimentError::BadSpec(format!(
            "variance saturates immediately (fit window of {fit_upto} points); widen the time grid"
        )));
    }
    let xs: Vec<f64> = windows[..fit_upto].iter().map(|w| w.ln()).collect();
    let ys: Vec<f64> = vars[..fit_upto].iter().map(|v| v.ln()).collect();
    let fit = stats::ols(&xs, &ys)?;
    let centered: Vec<Vec<f64>> = window_samples[..fit_upto]
        .iter()
        .map(|c| {
            let m = stats::mean(c);
            c.iter().map(|v| (v - m) * (v - m)).collect()
        })
        .collect();
    let mut boot_rng = ChaCha12Rng::seed_from_u64(xspec.seed ^ 0x6b76);
    let (ci_lo, ci_hi) =
        stats::bootstrap_slope_ci(&xs, &centered, BOOTSTRAP_RESAMPLES, &mut boot_rng)?;
    let pass = ci_lo >= SLOPE_BAND.0 && ci_hi <= SLOPE_BAND.1;
    cells.push(Cell::new(
        "slope",
        vec![
            Stat::new("slope", fit.slope, (ci_hi - ci_lo) / (2.0 * 1.96))
                .with_ci(ci_lo, ci_hi)
                .with_pass(pass),
            Stat::new("saturation_crossover", crossover, 0.0),
        ],
    ));
    Ok(Report::new(xspec, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn ou_case_has_time_averaging_gain() {
        // F = 0 gaussian: time averaging against the pure OU dynamics
        let spec = ExperimentSpec {
            experiment: ExperimentKind::KvTime,
            betas: vec![0.0],
            n_grid: vec![16],
            m: 128,
            replicas: 60,
            time_grid: vec![10.0, 40.0, 160.0, 640.0],
            seed: 11,
            ..Default::default()
        };
        let report = exp_kv_time(&spec).unwrap();
        let slope = report.cell("slope").unwrap().stat("slope").unwrap();
        assert!(
            slope.value < -0.5,
            "expected a variance gain, slope {}",
            slope.value
        );
    }
}
