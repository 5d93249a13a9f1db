//! Floating-point abstraction for the numerical core.
//!
//! Everything mathematical in this crate is written against [`Scalar`] so the
//! same code runs at `f32` or `f64`. Verification and the experiment harness
//! use `f64` (see [`crate::Real`]); `f32` is a fast path for exploratory runs.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Open01, StandardNormal};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (used for constants and node tables).
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 constant representable in Scalar")
    }

    /// Widening conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar convertible to f64")
    }

    /// Standard normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on the open interval (0, 1).
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    #[inline]
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }
}

impl Scalar for f32 {
    #[inline]
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    #[inline]
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(Open01)
    }
}

/// Wrap a signed site index onto a ring of `m` sites.
#[inline]
pub fn wrap(i: i64, m: usize) -> usize {
    i.rem_euclid(m as i64) as usize
}

/// Ring distance between two sites on a ring of `m` sites.
#[inline]
pub fn ring_distance(x: i64, y: i64, m: usize) -> i64 {
    let m = m as i64;
    let d = (x - y).rem_euclid(m);
    d.min(m - d)
}
