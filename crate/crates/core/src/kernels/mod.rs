//! Heat kernels on the ring: the deterministic semigroup of `c_N Delta`, the
//! multiplicative-noise lattice heat equation, and stochastic kernel columns
//! driven by recorded noise.

mod heat;
mod she;
mod stochastic;

pub use heat::{duhamel_apply, heat_kernel, hk_probe, HeatKernel, HkProbe};
pub use she::{she_run, SheState};
pub use stochastic::{
    apply_columns, chapman_kolmogorov_residual, chi_cutoff, run_stoch_kernel, KernelMode,
    KernelRun, StochKernelConfig, TapMonitor,
};

use thiserror::Error;

/// Errors from the kernel layer.
#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel times out of order: s = {s}, t = {t}")]
    TimeOrder { s: f64, t: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("initial data must be non-negative and finite")]
    NegativeData,
    #[error("bad kernel config: {0}")]
    BadKernelConfig(String),
    #[error("kernel column blow-up at t = {t}, site {site}")]
    KernelBlowUp { t: f64, site: usize },
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error(transparent)]
    ColeHopf(#[from] crate::cole_hopf::ColeHopfError),
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
}
