//! Narrow-wedge initial data and its propagation checks.
//!
//! The data is the steep tent `Z_x = exp(-(log N)^{1/9} |x| / N)` carrying
//! i.i.d. random-walk tails beyond the core region `|x| <= (log N)^{2/9} N`
//! (the logarithmically vanishing correction is dropped), normalized so the
//! lattice mass is one. Checks: mass normalization, tail mass outside
//! `|x| >= (log N)^{-1/10} N`, the core log-linearity, and agreement of the
//! replica-mean propagated field with the deterministic heat flow.

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::kernels::{heat_kernel, she_run};
use crate::lattice::{FieldState, FreshNoise};
use crate::numerics::stats;
use crate::potential::sample_ensemble;
use crate::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Tolerance on the lattice mass of the normalized data.
pub const MASS_TOLERANCE: f64 = 0.05;
/// Bound on the tail mass outside the slow-decay region.
pub const TAIL_MASS_BOUND: f64 = 0.1;
/// Sup-relative tolerance of the replica-mean profile against heat flow.
pub const MEAN_PROFILE_TOLERANCE: f64 = 0.1;

/// Wedge initial data on the ring.
#[derive(Debug, Clone)]
pub struct WedgeData {
    /// Surrogate gradient field consistent with the profile (the one ring
    /// bond closing the seam is an ordinary equilibrium draw).
    pub state: FieldState<Real>,
    /// The exponentiated data `Z_0`.
    pub z0: Vec<Real>,
    /// Deterministic mass normalizer from the geometric series of the tent.
    pub normalizer: Real,
    /// Core radius in sites.
    pub core: usize,
    /// Tent decay rate per site.
    pub decay: Real,
}

/// Signed ring coordinate of an index.
fn signed(idx: usize, m: usize) -> i64 {
    if idx <= m / 2 {
        idx as i64
    } else {
        idx as i64 - m as i64
    }
}

/// Build the wedge data at scaling parameter `n` on a ring of `m` sites.
pub fn wedge_initial_data<R: Rng + ?Sized>(
    n: u32,
    m: usize,
    model: &Model,
    rng: &mut R,
) -> Result<WedgeData, ExperimentError> {
    if n < 32 {
        return Err(ExperimentError::BadSpec(format!(
            "wedge data needs N >= 32, got {n}"
        )));
    }
    let nf = n as f64;
    let log_n = nf.ln();
    let decay = log_n.powf(1.0 / 9.0) / nf;
    let core = (log_n.powf(2.0 / 9.0) * nf).ceil() as usize;
    if m / 2 <= core + 2 {
        return Err(ExperimentError::BadSpec(format!(
            "ring of {m} sites cannot hold the wedge core radius {core}"
        )));
    }
    let lambda = model.constants.lambda;
    if lambda == 0.0 {
        return Err(ExperimentError::BadSpec(
            "wedge data needs a nonzero lambda (beta_2 != 0)".into(),
        ));
    }
    // random-walk tails beyond the core, one walk per side
    let tail_len = m / 2 - core;
    let right_tail = sample_ensemble(&model.ens0, tail_len, rng)?;
    let left_tail = sample_ensemble(&model.ens0, tail_len, rng)?;
    let w_scale = lambda / nf.sqrt();
    // log Z in the signed coordinate
    let mut log_z = vec![0.0f64; m];
    for idx in 0..m {
        let x = signed(idx, m);
        let ax = x.unsigned_abs() as usize;
        let mut v = -decay * ax as f64;
        if ax > core {
            let walk = if x > 0 { &right_tail } else { &left_tail };
            let upto = ax - core;
            v += w_scale * walk[..upto].iter().sum::<f64>();
        }
        log_z[idx] = v;
    }
    let z0: Vec<f64> = log_z.iter().map(|l| l.exp()).collect();
    // gradient field consistent with log Z along the ring; the seam bond
    // (between the two farthest sites) is closed by an equilibrium draw
    let seam = m / 2 + 1;
    let seed_bond = sample_ensemble(&model.ens0, 1, rng)?[0];
    let mut phi = vec![0.0f64; m];
    for idx in 1..m {
        phi[idx] = if idx == seam {
            seed_bond
        } else {
            nf.sqrt() / lambda * (log_z[idx] - log_z[idx - 1])
        };
    }
    phi[0] = nf.sqrt() / lambda * (log_z[0] - log_z[m - 1]);
    let state = FieldState::new(phi);
    // normalizer from the tent's geometric series on the ring
    let tent_mass: f64 = (0..m)
        .map(|idx| (-decay * signed(idx, m).unsigned_abs() as f64).exp())
        .sum();
    Ok(WedgeData {
        state,
        z0,
        normalizer: nf / tent_mass,
        core,
        decay,
    })
}

pub fn exp_wedge(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let n = *xspec.n_grid.first().unwrap();
    let m = xspec.ring_size(n);
    let nf = n as f64;
    let tail_radius = (nf.ln().powf(-0.1) * nf).ceil() as i64;

    // (i)/(ii): mass statistics over independent data replicas
    let replicas = xspec.replicas.max(30);
    let masses: Vec<Result<(f64, f64), ExperimentError>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
            rng.set_stream(r);
            let data = wedge_initial_data(n, m, &model, &mut rng)?;
            let mut total = 0.0;
            let mut tail = 0.0;
            for (idx, &z) in data.z0.iter().enumerate() {
                let v = data.normalizer * z / nf;
                total += v;
                if signed(idx, m).abs() >= tail_radius {
                    tail += v;
                }
            }
            Ok((total, tail))
        })
        .collect();
    let mut totals = Vec::with_capacity(replicas);
    let mut tails = Vec::with_capacity(replicas);
    for r in masses {
        let (total, tail) = r?;
        totals.push(total);
        tails.push(tail);
    }
    let mass_mean = stats::mean(&totals);
    let mass_se = stats::std_error(&totals);
    let tail_mean = stats::mean(&tails);
    let tail_se = stats::std_error(&tails);

    let mut cells = vec![
        Cell::new(
            "normalization",
            vec![Stat::new("lattice_mass", mass_mean, mass_se)
                .with_pass((mass_mean - 1.0).abs() <= MASS_TOLERANCE)],
        ),
        Cell::new(
            "tail-mass",
            vec![Stat::new("tail_mass", tail_mean, tail_se)
                .with_pass(tail_mean <= TAIL_MASS_BOUND)],
        ),
    ];

    // core profile of one fixed realization
    let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
    let data = wedge_initial_data(n, m, &model, &mut rng)?;
    {
        let xs: Vec<f64> = (1..=data.core).map(|x| x as f64).collect();
        let ys: Vec<f64> = (1..=data.core).map(|x| data.z0[x].ln()).collect();
        let fit = stats::ols(&xs, &ys)?;
        let rel = (fit.slope + data.decay).abs() / data.decay;
        cells.push(Cell::new(
            "core-profile",
            vec![
                Stat::new("origin_value", data.z0[0], 0.0)
                    .with_pass((data.z0[0] - 1.0).abs() < 1e-12),
                Stat::new("log_slope_rel_err", rel, 0.0).with_pass(rel < 1e-6),
            ],
        ));
    }

    // (iii): replica-mean propagated field vs deterministic heat flow
    let t_target = if xspec.horizon > 0.0 { xspec.horizon } else { 0.05 };
    let steps = 500usize;
    let dt = t_target / steps as f64;
    let sums: Vec<Result<Vec<f64>, ExperimentError>> = (0..xspec.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed ^ 0x7765646765);
            rng.set_stream(r);
            let mut src = FreshNoise::new(rng, dt);
            let out = she_run(&data.z0, &model.constants, n, dt, steps, &mut src, |_| {})?;
            Ok(out.q)
        })
        .collect();
    let mut mean_q = vec![0.0f64; m];
    let mut sq_q = vec![0.0f64; m];
    let mut count = 0usize;
    for s in sums {
        let q = s?;
        for (x, v) in q.into_iter().enumerate() {
            mean_q[x] += v;
            sq_q[x] += v * v;
        }
        count += 1;
    }
    for v in mean_q.iter_mut() {
        *v /= count as f64;
    }
    let flow = heat_kernel(&model.constants, n, m, 0.0, t_target)?.apply(&data.z0)?;
    let mut sup_rel = 0.0f64;
    let mut sup_site = 0usize;
    for idx in 0..m {
        if signed(idx, m).unsigned_abs() as i64 <= n as i64 {
            let rel = (mean_q[idx] - flow[idx]).abs() / flow[idx];
            if rel > sup_rel {
                sup_rel = rel;
                sup_site = idx;
            }
        }
    }
    let site_var = (sq_q[sup_site] / count as f64
        - (mean_q[sup_site]).powi(2))
    .max(0.0);
    let rel_se = (site_var / count as f64).sqrt() / flow[sup_site];
    cells.push(Cell::new(
        "mean-profile",
        vec![
            Stat::new("sup_rel_error", sup_rel, rel_se)
                .with_pass(sup_rel <= MEAN_PROFILE_TOLERANCE),
            Stat::new(
                "propagated_mass",
                mean_q.iter().sum::<f64>() * data.normalizer / nf,
                0.0,
            ),
        ],
    ));
    Ok(Report::new(xspec, cells))
}
