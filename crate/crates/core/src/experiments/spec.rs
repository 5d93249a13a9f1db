//! Experiment configuration.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::potential::PotentialFamily;

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    JetSuite,
    Invariance,
    CltSpace,
    KvTime,
    PsiScaling,
    CompareShe,
    KernelProbe,
    Wedge,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "jet-suite" => Self::JetSuite,
            "invariance" => Self::Invariance,
            "clt-space" => Self::CltSpace,
            "kv-time" => Self::KvTime,
            "psi-scaling" => Self::PsiScaling,
            "compare-she" => Self::CompareShe,
            "kernel-probe" => Self::KernelProbe,
            "wedge" => Self::Wedge,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::JetSuite => "jet-suite",
            Self::Invariance => "invariance",
            Self::CltSpace => "clt-space",
            Self::KvTime => "kv-time",
            Self::PsiScaling => "psi-scaling",
            Self::CompareShe => "compare-she",
            Self::KernelProbe => "kernel-probe",
            Self::Wedge => "wedge",
        }
    }
}

/// Full experiment configuration; every field participates in the
/// reproducibility contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub potential: PotentialFamily,
    /// Drift coefficients `beta_2 ..`.
    pub betas: Vec<f64>,
    /// Target ensemble mean.
    pub sigma: f64,
    /// Scaling parameters to sweep.
    pub n_grid: Vec<u32>,
    /// Ring size; 0 selects `4 N` automatically.
    pub m: usize,
    /// Step-size safety factor.
    pub theta: f64,
    /// Horizon (meaning is per experiment).
    pub horizon: f64,
    pub replicas: usize,
    /// Smoothing exponent of the mollifier and derived scales.
    pub delta_s: f64,
    /// Block/length grid (sites for space averages, block sizes for the
    /// ensemble-equivalence scan).
    pub block_grid: Vec<usize>,
    /// Time-window grid in units of `N^{-2}` (time averages).
    pub time_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::JetSuite,
            potential: PotentialFamily::Gaussian,
            betas: vec![1.0],
            sigma: 0.0,
            n_grid: vec![16],
            m: 0,
            theta: 0.05,
            horizon: 0.05,
            replicas: 200,
            delta_s: 0.1,
            block_grid: Vec::new(),
            time_grid: Vec::new(),
            seed: 42,
        }
    }
}

impl ExperimentSpec {
    /// Ring size for a given scaling parameter (auto rule: `4 N`).
    pub fn ring_size(&self, n: u32) -> usize {
        if self.m == 0 {
            4 * n as usize
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.betas.is_empty() {
            return Err(ExperimentError::BadSpec("need at least beta_2".into()));
        }
        if self.n_grid.is_empty() {
            return Err(ExperimentError::BadSpec("empty N grid".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 0.25) {
            return Err(ExperimentError::BadSpec(format!(
                "stability factor theta = {} outside (0, 0.25]",
                self.theta
            )));
        }
        if !(0.0..=0.5).contains(&self.delta_s) {
            return Err(ExperimentError::BadSpec(format!(
                "delta_s = {} outside [0, 0.5]",
                self.delta_s
            )));
        }
        // p-value based experiments need enough replicas for their asymptotics
        let needs_pvalues = matches!(self.experiment, ExperimentKind::Invariance);
        if needs_pvalues && self.replicas < 30 {
            return Err(ExperimentError::BadSpec(format!(
                "{} needs >= 30 replicas for p-values, got {}",
                self.experiment.name(),
                self.replicas
            )));
        }
        if let PotentialFamily::CosinePerturbed { kappa } = self.potential {
            if !(0.0..=0.5).contains(&kappa) {
                return Err(ExperimentError::BadSpec(format!(
                    "kappa_pert = {kappa} outside [0, 0.5]"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_validates() {
        ExperimentSpec::default().validate().unwrap();
    }

    #[test]
    fn bad_theta_is_rejected() {
        let spec = ExperimentSpec {
            theta: 0.5,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn replica_floor_for_p_values() {
        let spec = ExperimentSpec {
            experiment: ExperimentKind::Invariance,
            replicas: 10,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn kind_round_trip() {
        for name in [
            "jet-suite",
            "invariance",
            "clt-space",
            "kv-time",
            "psi-scaling",
            "compare-she",
            "kernel-probe",
            "wedge",
        ] {
            assert_eq!(ExperimentKind::parse(name).unwrap().name(), name);
        }
        assert!(ExperimentKind::parse("nope").is_none());
    }
}
