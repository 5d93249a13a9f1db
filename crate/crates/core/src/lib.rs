//! Simulation laboratory for a lattice Ginzburg-Landau interface model and its
//! Cole-Hopf / stochastic-heat-equation structure.
//!
//! The ingredients, bottom up:
//!
//! * [`potential`]: grand-canonical single-site ensembles `exp(-U[a] + v a) da`,
//!   tilt inversion, model constants (alpha, lambda, R_lambda), and jet-moment
//!   classification of local functions.
//! * [`lattice`]: explicit Euler-Maruyama integration of the gradient field
//!   `phi` and the origin height on a periodic ring, with exact conservation of
//!   the field sum and reproducible noise streams.
//! * [`cole_hopf`]: the exponentiated height field `Z`, its mollification `S`,
//!   the ratio `R = Z/S` with cutoff, and the mesoscopic space/space-time
//!   averaging operators.
//! * [`kernels`]: the deterministic semigroup `exp((t-s) c_N Delta)` on the
//!   ring, a multiplicative-noise lattice heat equation, and stochastic kernel
//!   columns coupled to recorded noise.
//! * [`experiments`]: seeded statistical experiments that turn the model's
//!   quantitative structure into pass/fail reports.
//! * [`io`]: flat config files, JSON/CSV reports, binary trajectories, and run
//!   manifests.
//!
//! Core numerics are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! experiment and I/O layers fix [`Real`] = `f64`.

pub mod cole_hopf;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod numerics;
pub mod potential;
pub mod scalar;

/// Scalar type used by the experiment harness and CLI.
pub type Real = f64;

/// Ensemble over [`Real`].
pub type RealEnsemble = potential::Ensemble<Real>;
/// Model constants over [`Real`].
pub type RealConstants = potential::ModelConstants<Real>;
