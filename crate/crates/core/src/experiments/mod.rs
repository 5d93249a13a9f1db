//! Seeded statistical experiments.
//!
//! Every experiment is a pure function of its [`ExperimentSpec`]: identical
//! spec and seed reproduce the identical [`Report`], with replicas fanned out
//! over a worker pool and reduced in replica order. Each reported number
//! carries a standard error, and pass/fail is derivable from the stored
//! numbers alone.

mod clt_space;
mod invariance;
mod jet_suite;
mod kernel_probe;
mod kv_time;
mod model;
mod psi_scaling;
mod report;
mod she_comparison;
mod spec;
mod wedge;

pub use clt_space::exp_clt_space;
pub use invariance::exp_invariance;
pub use jet_suite::exp_jet_suite;
pub use kernel_probe::exp_kernel_probe;
pub use kv_time::exp_kv_time;
pub use model::Model;
pub use psi_scaling::exp_psi_scaling;
pub use report::{Cell, Report, Stat};
pub use she_comparison::exp_she_comparison;
pub use spec::{ExperimentKind, ExperimentSpec};
pub use wedge::{exp_wedge, wedge_initial_data, WedgeData};

use thiserror::Error;

/// Errors from the experiment layer.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error(transparent)]
    ColeHopf(#[from] crate::cole_hopf::ColeHopfError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Dispatch an experiment by kind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report, ExperimentError> {
    spec.validate()?;
    match spec.experiment {
        ExperimentKind::JetSuite => exp_jet_suite(spec),
        ExperimentKind::Invariance => exp_invariance(spec),
        ExperimentKind::CltSpace => exp_clt_space(spec),
        ExperimentKind::KvTime => exp_kv_time(spec),
        ExperimentKind::PsiScaling => exp_psi_scaling(spec),
        ExperimentKind::CompareShe => exp_she_comparison(spec),
        ExperimentKind::KernelProbe => exp_kernel_probe(spec),
        ExperimentKind::Wedge => exp_wedge(spec),
    }
}
