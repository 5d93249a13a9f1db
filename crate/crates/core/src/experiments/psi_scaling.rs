//! Equivalence-of-ensembles surrogate: the second moment of the tilted mean
//! at an empirical block average,
//!
//! ```text
//!   m(l) = E | E^{rho} q |^2,   rho = block mean of l i.i.d. draws,
//! ```
//!
//! which must decay at least like `l^{-3/2}` for every catalog entry (the
//! leading term of the ensemble-equivalence expansion of the conditional
//! expectation).

use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentSpec, Model, Report, Stat};
use crate::cole_hopf::local_fn_library;
use crate::potential::{ensemble_moment, sample_ensemble, tilt_for_mean};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Exponent of the decay bound.
pub const DECAY_EXPONENT: f64 = -1.5;

/// Default block-length grid.
fn default_blocks() -> Vec<usize> {
    vec![16, 32, 64, 128, 256, 512, 1024]
}

pub fn exp_psi_scaling(xspec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    let model = Model::build(xspec)?;
    let library = local_fn_library(&model.ens0, &model.constants)?;
    let blocks = if xspec.block_grid.is_empty() {
        default_blocks()
    } else {
        xspec.block_grid.clone()
    };
    let replicas = xspec.replicas.max(100);

    // second moments m[q][l] with per-replica squares for the errors
    type ReplicaOut = Vec<Vec<f64>>; // [block][q] -> E^rho q
    let per_replica: Vec<Result<ReplicaOut, ExperimentError>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(xspec.seed);
            rng.set_stream(r);
            let mut out = Vec::with_capacity(blocks.len());
            for &l in &blocks {
                let draw = sample_ensemble(&model.ens0, l, &mut rng)?;
                let rho = draw.iter().sum::<f64>() / l as f64;
                let tilted = tilt_for_mean(&model.spec, rho)?;
                let mut vals = Vec::with_capacity(library.len());
                for q in &library {
                    vals.push(ensemble_moment(&tilted, q)?);
                }
                out.push(vals);
            }
            Ok(out)
        })
        .collect();

    let mut sums = vec![vec![0.0f64; library.len()]; blocks.len()];
    let mut sums_sq = vec![vec![0.0f64; library.len()]; blocks.len()];
    for r in per_replica {
        for (bi, vals) in r?.into_iter().enumerate() {
            for (qi, v) in vals.into_iter().enumerate() {
                sums[bi][qi] += v * v;
                sums_sq[bi][qi] += v * v * v * v;
            }
        }
    }

    let rf = replicas as f64;
    let mut cells = Vec::new();
    for (qi, q) in library.iter().enumerate() {
        let mut stats_vec = Vec::new();
        // calibrate the bound constant at the smallest block
        let m0 = sums[0][qi] / rf;
        let c_bound = m0 * (blocks[0] as f64).powf(-DECAY_EXPONENT);
        let mut pass_all = true;
        for (bi, &l) in blocks.iter().enumerate() {
            let m = sums[bi][qi] / rf;
            let var = (sums_sq[bi][qi] / rf - m * m).max(0.0);
            let se = (var / rf).sqrt();
            let bound = c_bound * (l as f64).powf(DECAY_EXPONENT);
            let ok = m <= bound + 4.0 * se + 1e-14;
            pass_all &= ok;
            stats_vec.push(
                Stat::new(format!("m_l{l}"), m, se).with_pass(ok),
            );
        }
        let _ = pass_all;
        cells.push(Cell::new(format!("q/{}", q.name), stats_vec));
    }

    // exact-oracle cell for the gaussian centered square: m(l) = 3 / l^2
    if matches!(
        xspec.potential,
        crate::potential::PotentialFamily::Gaussian
    ) {
        let qi = library
            .iter()
            .position(|q| q.name == "centered-square")
            .expect("catalog always carries the centered square");
        let mut oracle_stats = Vec::new();
        for (bi, &l) in blocks.iter().enumerate() {
            let m = sums[bi][qi] / rf;
            let var = (sums_sq[bi][qi] / rf - m * m).max(0.0);
            let se = (var / rf).sqrt();
            let exact = 3.0 / (l as f64 * l as f64);
            oracle_stats.push(
                Stat::new(format!("vs_exact_l{l}"), m - exact, se)
                    .with_pass((m - exact).abs() <= 5.0 * se + 1e-12),
            );
        }
        cells.push(Cell::new("oracle/centered-square-3-over-l2", oracle_stats));
    }
    Ok(Report::new(xspec, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn gaussian_centered_square_matches_exact_decay() {
        let spec = ExperimentSpec {
            experiment: ExperimentKind::PsiScaling,
            betas: vec![1.0, 0.3],
            replicas: 1500,
            block_grid: vec![16, 64, 256],
            seed: 9,
            ..Default::default()
        };
        let report = exp_psi_scaling(&spec).unwrap();
        let oracle = report.cell("oracle/centered-square-3-over-l2").unwrap();
        assert!(oracle.pass, "{:#?}", oracle.stats);
    }
}
