//! Adaptive Gauss-Kronrod quadrature (G7/K15 pair with bisection).

use super::NumericsError;
use crate::scalar::Scalar;

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];

/// Kronrod-15 weights matching [`XGK`].
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss-7 weights for the odd-indexed abscissae of [`XGK`].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_95,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub evals: usize,
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut kronrod = T::zero();
    let mut gauss = T::zero();
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let x = T::of(x);
        let wk = T::of(wk);
        let val = if i == 7 {
            f(c)
        } else {
            f(c - h * x) + f(c + h * x)
        };
        kronrod = kronrod + wk * val;
        if i % 2 == 1 {
            gauss = gauss + T::of(WG[i / 2]) * val;
        }
    }
    (kronrod * h, (kronrod - gauss).abs() * h.abs())
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// Bisects until each panel's Gauss/Kronrod discrepancy is below its share of
/// the tolerance. Errors out instead of silently returning a bad value.
pub fn adaptive_gk<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    abs_tol: T,
) -> Result<QuadResult<T>, NumericsError> {
    const MAX_PANELS: usize = 16384;
    let mut stack = vec![(a, b, abs_tol)];
    let mut total = T::zero();
    let mut err_total = T::zero();
    let mut evals = 0usize;
    let mut panels = 0usize;
    // below this, |K - G| is roundoff, not truncation
    let noise_floor = |val: T| T::epsilon() * T::of(64.0) * val.abs();
    while let Some((lo, hi, tol)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(NumericsError::QuadratureNonConvergence {
                requested: abs_tol.as_f64(),
                achieved: err_total.as_f64(),
                evals,
            });
        }
        let (val, err) = gk15(f, lo, hi);
        evals += 15;
        if !val.is_finite() {
            return Err(NumericsError::NonFinite("adaptive_gk integrand"));
        }
        let width = (hi - lo).abs();
        let converged = err <= tol
            || err <= noise_floor(val)
            || width < T::of(1e-14) * (T::one() + lo.abs() + hi.abs());
        if converged {
            total = total + val;
            err_total = err_total + err;
        } else {
            let mid = (lo + hi) * T::of(0.5);
            let half_tol = tol * T::of(0.5);
            stack.push((lo, mid, half_tol));
            stack.push((mid, hi, half_tol));
        }
    }
    Ok(QuadResult {
        value: total,
        abs_err: err_total,
        evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp();
        let r = adaptive_gk(&f, -12.0, 12.0, 1e-13).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value - exact).abs() < 1e-12, "value {}", r.value);
    }

    #[test]
    fn integrates_polynomial_exactly() {
        let f = |x: f64| x * x * x * x;
        let r = adaptive_gk(&f, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.value - 0.2).abs() < 1e-14);
    }

    #[test]
    fn handles_oscillatory_integrand() {
        let f = |x: f64| (10.0 * x).cos() * (-x * x / 2.0).exp();
        let r = adaptive_gk(&f, -10.0, 10.0, 1e-12).unwrap();
        // exp(-k^2/2) * sqrt(2 pi) at k = 10
        let exact = (2.0 * std::f64::consts::PI).sqrt() * (-50.0f64).exp();
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn f32_smoke() {
        let f = |x: f32| x * x;
        let r = adaptive_gk(&f, 0.0f32, 1.0f32, 1e-5f32).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-5);
    }
}
