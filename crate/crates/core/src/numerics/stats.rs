//! Sample statistics for the experiment harness: moments, quantiles, ordinary
//! least squares, bootstrap confidence intervals, and the Kolmogorov-Smirnov
//! goodness-of-fit test against a known CDF.

use rand::Rng;

use super::NumericsError;

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Median (interpolated).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in quantile input"));
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    }
}

/// Pearson correlation of paired samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Result<OlsFit, NumericsError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(NumericsError::EmptySample("ols"));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Percentile bootstrap confidence interval for the OLS slope of
/// `log(statistic)` data, resampling replicas within each grid cell.
///
/// `cells[i]` holds the per-replica values entering the i-th grid point; the
/// fitted response per resample is `log(mean of resampled values)` when
/// `log_of_mean` is true (variance-type statistics), else the mean of logs.
pub fn bootstrap_slope_ci<R: Rng>(
    xs: &[f64],
    cells: &[Vec<f64>],
    resamples: usize,
    rng: &mut R,
) -> Result<(f64, f64), NumericsError> {
    if cells.is_empty() || cells.iter().any(|c| c.is_empty()) {
        return Err(NumericsError::EmptySample("bootstrap_slope_ci"));
    }
    let mut slopes = Vec::with_capacity(resamples);
    let mut ys = vec![0.0; cells.len()];
    for _ in 0..resamples {
        for (i, cell) in cells.iter().enumerate() {
            let mut acc = 0.0;
            for _ in 0..cell.len() {
                acc += cell[rng.gen_range(0..cell.len())];
            }
            ys[i] = (acc / cell.len() as f64).ln();
        }
        slopes.push(ols(xs, &ys)?.slope);
    }
    Ok((quantile(&slopes, 0.025), quantile(&slopes, 0.975)))
}

/// Kolmogorov-Smirnov statistic of a sample against a target CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in ks input"));
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov distribution tail: `P(sqrt(n) D > x)`.
pub fn kolmogorov_p(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// KS test p-value of a sample against a target CDF.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> (f64, f64) {
    let d = ks_statistic(sample, cdf);
    let n = sample.len() as f64;
    (d, kolmogorov_p(n.sqrt() * d))
}
