//! The deterministic semigroup `exp((t-s) c_N Delta)` on the ring, evaluated
//! spectrally (circulant diagonalization), with exponentially weighted norm
//! probes.

use super::KernelError;
use crate::potential::ModelConstants;
use crate::scalar::{ring_distance, wrap, Scalar};

/// A heat kernel slice `H_{s,t,x,y}`: translation invariant on the ring, so a
/// single row determines the whole (symmetric, doubly stochastic) matrix.
#[derive(Debug, Clone)]
pub struct HeatKernel<T> {
    pub n: u32,
    pub m: usize,
    pub c_n: T,
    pub s: T,
    pub t: T,
    /// `row[d] = H(x, x + d)` for `d = 0..M`.
    pub row: Vec<T>,
    /// Offsets beyond this carry relative mass below the truncation floor.
    support: usize,
}

/// Relative truncation floor for the fast convolution path.
const SUPPORT_FLOOR: f64 = 1e-17;

/// Build `exp((t - s) c_N Delta)` by the exact eigenexpansion
/// `row_d = M^{-1} sum_k exp(-tau c_N mu_k) cos(2 pi k d / M)`,
/// `mu_k = 4 sin^2(pi k / M)`.
pub fn heat_kernel<T: Scalar>(
    constants: &ModelConstants<T>,
    n: u32,
    m: usize,
    s: T,
    t: T,
) -> Result<HeatKernel<T>, KernelError> {
    if t < s {
        return Err(KernelError::TimeOrder {
            s: s.as_f64(),
            t: t.as_f64(),
        });
    }
    let tau = t - s;
    let c_n = constants.c_n(n);
    let mf = m as f64;
    // decay factors per frequency
    let decay: Vec<T> = (0..m)
        .map(|k| {
            let mu = T::of(4.0 * (std::f64::consts::PI * k as f64 / mf).sin().powi(2));
            (-tau * c_n * mu).exp()
        })
        .collect();
    let mut row = Vec::with_capacity(m);
    for d in 0..m {
        let mut acc = T::zero();
        for (k, &dec) in decay.iter().enumerate() {
            let th = T::of(2.0 * std::f64::consts::PI * (k * d % m) as f64 / mf);
            acc = acc + dec * th.cos();
        }
        let v = acc / T::of(mf);
        // roundoff can leave tiny negatives in the far tail
        row.push(if v < T::zero() { T::zero() } else { v });
    }
    let floor = T::of(SUPPORT_FLOOR) * row[0];
    let mut support = m / 2;
    for d in 1..=m / 2 {
        if row[d] > floor {
            support = d;
        }
    }
    Ok(HeatKernel {
        n,
        m,
        c_n,
        s,
        t,
        row,
        support,
    })
}

impl<T: Scalar> HeatKernel<T> {
    /// Kernel entry `H(x, y)`.
    pub fn entry(&self, x: i64, y: i64) -> T {
        self.row[wrap(x - y, self.m)]
    }

    /// Column `x -> H(x, y)`.
    pub fn column(&self, y: usize) -> Vec<T> {
        (0..self.m)
            .map(|x| self.row[wrap(x as i64 - y as i64, self.m)])
            .collect()
    }

    pub fn row_sum(&self) -> T {
        self.row.iter().copied().sum()
    }

    /// Apply to a field: `out_x = sum_y H(x, y) f_y`, using the truncated
    /// support of the row.
    pub fn apply(&self, f: &[T]) -> Result<Vec<T>, KernelError> {
        if f.len() != self.m {
            return Err(KernelError::ShapeMismatch {
                expected: self.m,
                got: f.len(),
            });
        }
        let m = self.m;
        let r = self.support.min(m / 2);
        let mut out = Vec::with_capacity(m);
        for x in 0..m as i64 {
            let mut acc = self.row[0] * f[x as usize];
            for d in 1..=r as i64 {
                let w = self.row[d as usize];
                if d as usize == m - d as usize {
                    // antipodal offset counted once on even rings
                    acc = acc + w * f[wrap(x + d, m)];
                } else {
                    acc = acc + w * (f[wrap(x + d, m)] + f[wrap(x - d, m)]);
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Semigroup composition: `self` after `earlier`.
    pub fn compose(&self, earlier: &HeatKernel<T>) -> Result<HeatKernel<T>, KernelError> {
        if earlier.m != self.m {
            return Err(KernelError::ShapeMismatch {
                expected: self.m,
                got: earlier.m,
            });
        }
        let row = self.apply(&earlier.row)?;
        let mut out = HeatKernel {
            n: self.n,
            m: self.m,
            c_n: self.c_n,
            s: earlier.s,
            t: self.t,
            row,
            support: self.m / 2,
        };
        let floor = T::of(SUPPORT_FLOOR) * out.row[0];
        let mut support = out.m / 2;
        for d in 1..=out.m / 2 {
            if out.row[d] > floor {
                support = d;
            }
        }
        out.support = support;
        Ok(out)
    }

    /// Second moment of the row under the signed ring offset.
    pub fn row_variance(&self) -> T {
        let m = self.m as i64;
        let mut acc = T::zero();
        for d in 0..m {
            let signed = if d <= m / 2 { d } else { d - m };
            acc = acc + T::of((signed * signed) as f64) * self.row[d as usize];
        }
        acc
    }
}

/// Exponentially weighted norms of one kernel row around `x`.
#[derive(Debug, Clone, Copy)]
pub struct HkProbe<T> {
    pub weighted_l1: T,
    pub weighted_l2: T,
    pub weighted_sup: T,
}

/// `sum_y e^{kappa d(x,y)/N} H`, `sum_y e^{2 kappa d(x,y)/N} H^2`, and
/// `sup_y e^{kappa d(x,y)/N} H`, with ring distance `d`.
pub fn hk_probe<T: Scalar>(kernel: &HeatKernel<T>, kappa: T, x: i64) -> HkProbe<T> {
    let m = kernel.m;
    let nf = T::of(f64::from(kernel.n));
    let mut l1 = T::zero();
    let mut l2 = T::zero();
    let mut sup = T::zero();
    for y in 0..m as i64 {
        let d = T::of(ring_distance(x, y, m) as f64);
        let h = kernel.entry(x, y);
        let w = (kappa * d / nf).exp();
        l1 = l1 + w * h;
        l2 = l2 + w * w * h * h;
        sup = sup.max(w * h);
    }
    HkProbe {
        weighted_l1: l1,
        weighted_l2: l2,
        weighted_sup: sup,
    }
}

/// Propagate data by a kernel: plain matrix-vector product.
pub fn duhamel_apply<T: Scalar>(kernel: &HeatKernel<T>, data: &[T]) -> Result<Vec<T>, KernelError> {
    kernel.apply(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{compute_constants, PotentialSpec};

    fn constants() -> ModelConstants<f64> {
        compute_constants(&PotentialSpec::gaussian(), &[1.0]).unwrap()
    }

    /// Dense matrix exponential by scaling-and-squaring Taylor, as an
    /// independent oracle.
    fn expm_oracle(m: usize, coeff: f64) -> Vec<Vec<f64>> {
        // A = coeff * Delta
        let mut a = vec![vec![0.0; m]; m];
        for x in 0..m {
            a[x][x] = -2.0 * coeff;
            a[x][(x + 1) % m] += coeff;
            a[x][(x + m - 1) % m] += coeff;
        }
        let norm = 4.0 * coeff.abs();
        let s = norm.log2().ceil().max(0.0) as u32 + 1;
        let scale = 0.5f64.powi(s as i32);
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        let matmul = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| {
            let mut out = vec![vec![0.0; m]; m];
            for i in 0..m {
                for k in 0..m {
                    let pik = p[i][k];
                    if pik == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        out[i][j] += pik * q[k][j];
                    }
                }
            }
            out
        };
        // Taylor to order 20
        let mut result = vec![vec![0.0; m]; m];
        for i in 0..m {
            result[i][i] = 1.0;
        }
        let mut term = result.clone();
        for k in 1..=20 {
            term = matmul(&term, &a);
            for i in 0..m {
                for j in 0..m {
                    term[i][j] /= k as f64;
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..s {
            result = matmul(&result, &result);
        }
        result
    }

    #[test]
    fn zero_time_is_identity() {
        let c = constants();
        let k = heat_kernel(&c, 8, 32, 0.3, 0.3).unwrap();
        assert!((k.row[0] - 1.0).abs() < 1e-12);
        for d in 1..32 {
            assert!(k.row[d].abs() < 1e-12);
        }
    }

    #[test]
    fn rows_are_stochastic_and_positive() {
        let c = constants();
        for tau in [1e-5, 1e-3, 0.05] {
            let k = heat_kernel(&c, 8, 64, 0.0, tau).unwrap();
            assert!((k.row_sum() - 1.0).abs() < 1e-12, "tau {tau}");
            assert!(k.row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn symmetric_and_translation_invariant() {
        let c = constants();
        let k = heat_kernel(&c, 8, 64, 0.0, 0.01).unwrap();
        for (x, y) in [(3i64, 17i64), (0, 40), (60, 5)] {
            assert!((k.entry(x, y) - k.entry(y, x)).abs() < 1e-15);
            assert!((k.entry(x, y) - k.entry(0, y - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_dense_matrix_exponential() {
        let c = constants();
        let n = 4u32;
        let m = 64usize;
        let tau = 2e-3;
        let k = heat_kernel(&c, n, m, 0.0, tau).unwrap();
        let oracle = expm_oracle(m, tau * c.c_n(n));
        for y in [0usize, 10, 31] {
            let col = k.column(y);
            for x in 0..m {
                assert!(
                    (col[x] - oracle[x][y]).abs() < 1e-9,
                    "H({x},{y}) = {} vs {}",
                    col[x],
                    oracle[x][y]
                );
            }
        }
        // row variance ~ 2 c_N tau away from wrap-around
        let var = k.row_variance();
        let expect = 2.0 * c.c_n(n) * tau;
        assert!((var - expect).abs() < 1e-6 + 1e-3 * expect, "{var} vs {expect}");
    }

    #[test]
    fn semigroup_property_is_exact() {
        let c = constants();
        let k1 = heat_kernel(&c, 8, 64, 0.0, 0.004).unwrap();
        let k2 = heat_kernel(&c, 8, 64, 0.004, 0.01).unwrap();
        let direct = heat_kernel(&c, 8, 64, 0.0, 0.01).unwrap();
        let composed = k2.compose(&k1).unwrap();
        for d in 0..64 {
            assert!(
                (composed.row[d] - direct.row[d]).abs() <= 1e-10,
                "offset {d}: {} vs {}",
                composed.row[d],
                direct.row[d]
            );
        }
    }

    #[test]
    fn apply_reproduces_trivial_cases() {
        let c = constants();
        let k = heat_kernel(&c, 8, 32, 0.0, 0.01).unwrap();
        // constant data is fixed (row sums 1)
        let out = k.apply(&vec![2.0; 32]).unwrap();
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
        // delta data returns the kernel column
        let mut delta = vec![0.0; 32];
        delta[7] = 1.0;
        let col = k.apply(&delta).unwrap();
        let expect = k.column(7);
        for x in 0..32 {
            assert!((col[x] - expect[x]).abs() < 1e-14);
        }
        // identity kernel passes data through
        let id = heat_kernel(&c, 8, 32, 0.0, 0.0).unwrap();
        let data: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let out = id.apply(&data).unwrap();
        for x in 0..32 {
            assert!((out[x] - data[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_limits() {
        let c = constants();
        let k = heat_kernel(&c, 8, 64, 0.0, 0.01).unwrap();
        // kappa = 0: weighted l1 is the row sum
        let p = hk_probe(&k, 0.0, 5);
        assert!((p.weighted_l1 - 1.0).abs() < 1e-12);
        // tau -> 0: sup-weighted value -> 1
        let id = heat_kernel(&c, 8, 64, 0.0, 1e-12).unwrap();
        let p = hk_probe(&id, 1.0, 0);
        assert!((p.weighted_sup - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weighted_l2_envelope_constant_is_stable() {
        // C(tau) = N |tau|^{1/2} sum e^{2k d/N} H^2 settles once the kernel
        // spreads over a few sites and before it feels the ring
        let c = constants();
        let n = 64u32;
        let m = 512usize;
        let mut consts = Vec::new();
        let mut tau = 1e-3;
        while tau < 0.07 {
            let k = heat_kernel(&c, n, m, 0.0, tau).unwrap();
            let p = hk_probe(&k, 1.0, 0);
            consts.push((n as f64) * tau.sqrt() * p.weighted_l2);
            tau *= 2.0;
        }
        let max = consts.iter().cloned().fold(f64::MIN, f64::max);
        let min = consts.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 2.0, "envelope constants {consts:?}");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let c = constants();
        let k = heat_kernel(&c, 8, 32, 0.0, 0.01).unwrap();
        assert!(matches!(
            k.apply(&vec![0.0; 16]),
            Err(KernelError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            heat_kernel(&c, 8, 32, 1.0, 0.5),
            Err(KernelError::TimeOrder { .. })
        ));
    }

    #[test]
    fn f32_kernel_smoke() {
        let spec = PotentialSpec::<f32>::gaussian();
        let c = crate::potential::compute_constants(&spec, &[1.0f32]).unwrap();
        let k = heat_kernel(&c, 8, 32, 0.0f32, 0.01).unwrap();
        assert!((k.row_sum() - 1.0).abs() < 1e-4);
    }
}
