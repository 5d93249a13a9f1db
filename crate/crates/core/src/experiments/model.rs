//! Assembled model: potential, constants, and the reference ensembles.

use super::{ExperimentError, ExperimentSpec};
use crate::potential::{
    compute_constants, tilt_for_mean, Ensemble, ModelConstants, PotentialSpec,
};
use crate::Real;

/// Everything derived from the model section of a spec.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: PotentialSpec<Real>,
    pub constants: ModelConstants<Real>,
    /// Mean-zero reference ensemble.
    pub ens0: Ensemble<Real>,
    /// Ensemble at the configured target mean.
    pub ens: Ensemble<Real>,
}

impl Model {
    pub fn build(xspec: &ExperimentSpec) -> Result<Self, ExperimentError> {
        let spec = PotentialSpec::from_family(xspec.potential)?;
        let constants = compute_constants(&spec, &xspec.betas)?;
        let ens0 = tilt_for_mean(&spec, 0.0)?;
        let ens = if xspec.sigma == 0.0 {
            ens0.clone()
        } else {
            tilt_for_mean(&spec, xspec.sigma)?
        };
        Ok(Self {
            spec,
            constants,
            ens0,
            ens,
        })
    }

    /// Marginal CDF of the configured ensemble, tabulated and interpolated.
    /// Accurate to quadrature precision well inside the grid.
    pub fn marginal_cdf(&self) -> impl Fn(f64) -> f64 {
        let lo = self.ens.mean() - 10.0;
        let hi = self.ens.mean() + 10.0;
        let points = 40_001usize;
        let dx = (hi - lo) / (points - 1) as f64;
        let spec = *self.ens.spec();
        let upsilon = self.ens.upsilon();
        let log_z = self.ens.log_z();
        let density = move |a: f64| {
            let (u, _, _) = spec.eval_unchecked(a);
            (upsilon * a - u - log_z).exp()
        };
        // cumulative trapezoid
        let mut cdf = Vec::with_capacity(points);
        let mut acc = 0.0;
        let mut prev = density(lo);
        cdf.push(0.0);
        for i in 1..points {
            let x = lo + dx * i as f64;
            let d = density(x);
            acc += 0.5 * dx * (prev + d);
            prev = d;
            cdf.push(acc);
        }
        // normalize the tiny truncation remainder
        let total = *cdf.last().unwrap();
        for v in cdf.iter_mut() {
            *v /= total;
        }
        move |x: f64| {
            if x <= lo {
                return 0.0;
            }
            if x >= hi {
                return 1.0;
            }
            let pos = (x - lo) / dx;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            cdf[i] + frac * (cdf[i + 1] - cdf[i])
        }
    }
}
