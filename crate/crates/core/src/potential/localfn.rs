//! Local functions of the field and their ensemble moments.
//!
//! A local function reads a finite window of sites. The ones arising in the
//! interface model are sums of products of single-site factors
//! `phi_w^p * (U'[phi_w])^q`, which we keep in product form so product-measure
//! expectations factorize into one-dimensional quadratures. Arbitrary
//! evaluators are supported through a (slow) tensor quadrature fallback.

use std::sync::Arc;

use super::{Ensemble, PotentialError};
use crate::numerics::quad::adaptive_gk;
use crate::scalar::{wrap, Scalar};

/// One site's contribution to a product term: `phi^phi_pow * U'(phi)^du_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteFactor {
    pub site: i64,
    pub phi_pow: u8,
    pub du_pow: u8,
}

/// `coeff * prod_w phi_w^p U'[phi_w]^q` with distinct sites merged.
#[derive(Debug, Clone)]
pub struct PolyTerm<T> {
    pub coeff: T,
    pub factors: Vec<SiteFactor>,
}

impl<T: Scalar> PolyTerm<T> {
    pub fn new(coeff: T, factors: Vec<(i64, u8, u8)>) -> Self {
        let mut merged: Vec<SiteFactor> = Vec::new();
        for (site, phi_pow, du_pow) in factors {
            if let Some(f) = merged.iter_mut().find(|f| f.site == site) {
                f.phi_pow += phi_pow;
                f.du_pow += du_pow;
            } else {
                merged.push(SiteFactor {
                    site,
                    phi_pow,
                    du_pow,
                });
            }
        }
        merged.sort_by_key(|f| f.site);
        Self {
            coeff,
            factors: merged,
        }
    }

    /// Shift every site by `offset`.
    pub fn shifted(&self, offset: i64) -> Self {
        let mut t = self.clone();
        for f in &mut t.factors {
            f.site += offset;
        }
        t
    }
}

/// Which side of the origin a one-sided window sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Window inside `{1, .., l}`.
    Right,
    /// Window inside `{-l, .., 0}`.
    Left,
    /// Window straddles the origin.
    TwoSided,
}

/// Evaluation body of a local function.
pub enum LocalFnKind<T> {
    /// Sum of products of single-site factors.
    Poly(Vec<PolyTerm<T>>),
    /// Arbitrary evaluator on the window slice (indexed `lo..=hi`).
    Custom(Arc<dyn Fn(&[T]) -> T + Send + Sync>),
}

impl<T> std::fmt::Debug for LocalFnKind<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LocalFnKind::Poly(terms) => f.debug_tuple("Poly").field(&terms.len()).finish(),
            LocalFnKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl<T: Clone> Clone for LocalFnKind<T> {
    fn clone(&self) -> Self {
        match self {
            LocalFnKind::Poly(t) => LocalFnKind::Poly(t.clone()),
            LocalFnKind::Custom(f) => LocalFnKind::Custom(f.clone()),
        }
    }
}

/// A local function with its declared window, jet order (the order through
/// which `d^l/d sigma^l E^sigma f` vanishes at `sigma = 0`), scaling class
/// (exponent `k` in the `N^{-1+k/2}` prefactor), and a polynomial growth
/// bound `|f| <= growth_const (1 + sum_w |phi_w|^growth_exponent)`.
#[derive(Debug, Clone)]
pub struct LocalFn<T> {
    pub name: String,
    pub window_lo: i64,
    pub window_hi: i64,
    pub jet_order: u8,
    pub scaling_class: u8,
    pub growth_exponent: u32,
    pub growth_const: T,
    pub kind: LocalFnKind<T>,
}

impl<T: Scalar> LocalFn<T> {
    pub fn poly(
        name: impl Into<String>,
        jet_order: u8,
        scaling_class: u8,
        terms: Vec<PolyTerm<T>>,
    ) -> Self {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let mut degree = 0u32;
        let mut coeff_sum = T::zero();
        for t in &terms {
            coeff_sum = coeff_sum + t.coeff.abs();
            let mut term_degree = 0u32;
            for f in &t.factors {
                lo = lo.min(f.site);
                hi = hi.max(f.site);
                term_degree += u32::from(f.phi_pow) + u32::from(f.du_pow);
            }
            degree = degree.max(term_degree);
        }
        if lo > hi {
            // constant function
            lo = 0;
            hi = 0;
        }
        Self {
            name: name.into(),
            window_lo: lo,
            window_hi: hi,
            jet_order,
            scaling_class,
            growth_exponent: degree.max(1),
            // crude but valid: |phi^p U'^q| <= (1+kappa)^q (1+|phi|)^(p+q)
            growth_const: (T::one() + coeff_sum) * T::of(4.0).powi(degree.max(1) as i32),
            kind: LocalFnKind::Poly(terms),
        }
    }

    pub fn custom(
        name: impl Into<String>,
        window: (i64, i64),
        jet_order: u8,
        scaling_class: u8,
        growth_exponent: u32,
        growth_const: T,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            window_lo: window.0,
            window_hi: window.1,
            jet_order,
            scaling_class,
            growth_exponent,
            growth_const,
            kind: LocalFnKind::Custom(Arc::new(f)),
        }
    }

    pub fn width(&self) -> usize {
        (self.window_hi - self.window_lo + 1) as usize
    }

    pub fn orientation(&self) -> Orientation {
        if self.window_lo >= 1 {
            Orientation::Right
        } else if self.window_hi <= 0 {
            Orientation::Left
        } else {
            Orientation::TwoSided
        }
    }

    /// Evaluate on a window slice indexed `window_lo..=window_hi`. The slice
    /// and the potential's derivative are supplied by the caller.
    pub fn eval_window(&self, window: &[T], u_prime: impl Fn(T) -> T) -> T {
        debug_assert_eq!(window.len(), self.width());
        match &self.kind {
            LocalFnKind::Custom(f) => f(window),
            LocalFnKind::Poly(terms) => {
                let mut acc = T::zero();
                for t in terms {
                    let mut prod = t.coeff;
                    for f in &t.factors {
                        let a = window[(f.site - self.window_lo) as usize];
                        if f.phi_pow > 0 {
                            prod = prod * a.powi(i32::from(f.phi_pow));
                        }
                        if f.du_pow > 0 {
                            prod = prod * u_prime(a).powi(i32::from(f.du_pow));
                        }
                    }
                    acc = acc + prod;
                }
                acc
            }
        }
    }

    /// Evaluate at ring site `x`: reads `phi[x + window_lo ..= x + window_hi]`
    /// with periodic wrapping.
    pub fn eval_ring(&self, phi: &[T], x: i64, u_prime: impl Fn(T) -> T) -> T {
        let m = phi.len();
        match &self.kind {
            LocalFnKind::Poly(terms) => {
                let mut acc = T::zero();
                for t in terms {
                    let mut prod = t.coeff;
                    for f in &t.factors {
                        let a = phi[wrap(x + f.site, m)];
                        if f.phi_pow > 0 {
                            prod = prod * a.powi(i32::from(f.phi_pow));
                        }
                        if f.du_pow > 0 {
                            prod = prod * u_prime(a).powi(i32::from(f.du_pow));
                        }
                    }
                    acc = acc + prod;
                }
                acc
            }
            LocalFnKind::Custom(f) => {
                let buf: Vec<T> = (self.window_lo..=self.window_hi)
                    .map(|w| phi[wrap(x + w, m)])
                    .collect();
                f(&buf)
            }
        }
    }

    /// Check the declared growth bound on a sampled configuration.
    pub fn growth_bound_holds(&self, window: &[T], u_prime: impl Fn(T) -> T) -> bool {
        let val = self.eval_window(window, u_prime).abs();
        let mut bound = T::one();
        for a in window {
            bound = bound + a.abs().powi(self.growth_exponent as i32);
        }
        val <= self.growth_const * bound
    }
}

/// `E^sigma[f]` for a local function under the product ensemble.
///
/// Product-form functions factorize into cached one-dimensional site moments.
/// Custom evaluators fall back to iterated tensor quadrature, which is
/// practical only for narrow windows; widths above 8 are rejected.
pub fn ensemble_moment<T: Scalar>(
    ens: &Ensemble<T>,
    f: &LocalFn<T>,
) -> Result<T, PotentialError> {
    match &f.kind {
        LocalFnKind::Poly(terms) => {
            let mut acc = T::zero();
            // tiny memo: windows are narrow, powers small
            let mut cache: Vec<((u8, u8), T)> = Vec::new();
            for t in terms {
                let mut prod = t.coeff;
                for fac in &t.factors {
                    let key = (fac.phi_pow, fac.du_pow);
                    let m = if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
                        *v
                    } else {
                        let v = ens.site_moment(fac.phi_pow, fac.du_pow)?;
                        cache.push((key, v));
                        v
                    };
                    prod = prod * m;
                }
                acc = acc + prod;
            }
            Ok(acc)
        }
        LocalFnKind::Custom(_) => {
            let width = f.width();
            if width > 8 {
                return Err(PotentialError::WindowTooWide {
                    lo: f.window_lo,
                    hi: f.window_hi,
                });
            }
            tensor_moment(ens, f)
        }
    }
}

fn tensor_moment<T: Scalar>(ens: &Ensemble<T>, f: &LocalFn<T>) -> Result<T, PotentialError> {
    let width = f.width();
    let spec = *ens.spec();
    let upsilon = ens.upsilon();
    let w = T::of(12.0) * spec.lambda_bound().sqrt();
    let lo = upsilon - w;
    let hi = upsilon + w;

    // Iterated one-dimensional integration; inner levels run at tighter
    // tolerance so their noise does not confuse the outer error estimates.
    fn level<T: Scalar>(
        f: &LocalFn<T>,
        spec: &super::PotentialSpec<T>,
        upsilon: T,
        lo: T,
        hi: T,
        assigned: &[T],
        width: usize,
    ) -> Result<T, PotentialError> {
        let tol = T::of(1e-9) * T::of(0.05).powi(assigned.len() as i32);
        let g = |a: T| {
            let (u, _, _) = spec.eval_unchecked(a);
            let weight = (upsilon * a - u).exp();
            let mut next = Vec::with_capacity(assigned.len() + 1);
            next.extend_from_slice(assigned);
            next.push(a);
            let inner = if next.len() == width {
                f.eval_window(&next, |x| spec.u_prime(x))
            } else {
                match level(f, spec, upsilon, lo, hi, &next, width) {
                    Ok(v) => v,
                    Err(_) => T::nan(),
                }
            };
            weight * inner
        };
        let r = adaptive_gk(&g, lo, hi, tol)?;
        Ok(r.value)
    }

    let raw = level(f, &spec, upsilon, lo, hi, &[], width)?;
    // divide by Z per dimension
    Ok(raw * (-ens.log_z() * T::of(width as f64)).exp())
}
