//! The exponentiated height field and its mesoscopic averaging structure.
//!
//! From a lattice state with heights `j` we form
//!
//! ```text
//!   Z_x = exp(lambda j_x - lambda R_lambda t),
//!   S   = mollifier * Z          (smooth at length N^{1 - delta_S}),
//!   R   = Z / S,                 cutoff to R^ = R 1[N^{delta_S/3} |R-1| <= 1],
//! ```
//!
//! plus block averages of local functions weighted by height ratios
//! `Z_{x+j}/Z_x = exp(lambda N^{-1/2}(phi_{x+1} + .. + phi_{x+j}))`, in space
//! only or additionally averaged backwards over a mesoscopic time window.

mod averaging;
mod fields;
mod library;
mod mollifier;

pub use averaging::{
    av_space, av_spacetime, default_scales, integrate_series, time_grad_av, AvConfig,
};
pub use fields::{cole_hopf_field, ColeHopfFields};
pub use library::{local_fn_library, mis_tagged_control};
pub use mollifier::Mollifier;

use thiserror::Error;

/// Errors from the Cole-Hopf layer.
#[derive(Debug, Error)]
pub enum ColeHopfError {
    #[error("exp overflow building the exponentiated field (max exponent {max_log:.3}); subtract the running height maximum and work with differences")]
    Overflow { max_log: f64 },
    #[error("averaging window does not fit: need {needed} sites on a ring of {m}")]
    BlockTooWide { needed: usize, m: usize },
    #[error("two-sided local function '{0}' cannot be block-averaged; shift it to a one-sided window")]
    TwoSidedWindow(String),
    #[error("history covers [{have_lo:.6}, {have_hi:.6}] but the average needs [{need_lo:.6}, {need_hi:.6}]")]
    InsufficientHistory {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("mollifier support {support} must stay below half the ring ({m} sites)")]
    MollifierTooWide { support: usize, m: usize },
    #[error(transparent)]
    Potential(#[from] crate::potential::PotentialError),
}
