//! The exponentiated height field, its mollification, and the cutoff ratio.

use super::{ColeHopfError, Mollifier};
use crate::lattice::FieldState;
use crate::potential::ModelConstants;
use crate::scalar::Scalar;

/// One time slice of the exponentiated fields.
#[derive(Debug, Clone)]
pub struct ColeHopfFields<T> {
    pub t: T,
    /// `Z_x = exp(lambda j_x - lambda R_lambda t)`.
    pub z: Vec<T>,
    /// Mollified field `S = kernel * Z`.
    pub s: Vec<T>,
    /// Ratio `R = Z / S`.
    pub r: Vec<T>,
    /// Cutoff ratio: `R` where `N^{delta_S/3} |R - 1| <= 1`, else 0.
    pub r_cut: Vec<T>,
    pub lambda: T,
    pub r_lambda: T,
}

/// Exponent beyond which `exp` would overflow comfortably within f32/f64.
const MAX_SAFE_LOG: f64 = 60.0;

/// Build `Z, S, R, R^` from a lattice state.
///
/// Ratios are formed in log-space (the running maximum of the exponent is
/// subtracted before exponentiating), so `R` and `R^` are immune to overflow;
/// the reported `Z`, `S` themselves must stay within floating range or an
/// overflow error is raised.
pub fn cole_hopf_field<T: Scalar>(
    state: &FieldState<T>,
    n: u32,
    constants: &ModelConstants<T>,
    mollifier: &Mollifier<T>,
) -> Result<ColeHopfFields<T>, ColeHopfError> {
    let m = state.m();
    mollifier.check_ring(m)?;
    let lambda = constants.lambda;
    let r_lambda = constants.r_lambda;
    let scale = T::of(f64::from(n)).sqrt().recip();

    // log Z along the ring from the origin height and prefix sums
    let mut log_z = Vec::with_capacity(m);
    let mut acc = state.j0;
    let drift_term = lambda * r_lambda * state.t;
    log_z.push(lambda * acc - drift_term);
    for x in 1..m {
        acc = acc + scale * state.phi[x];
        log_z.push(lambda * acc - drift_term);
    }
    let max_log = log_z
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    if max_log.as_f64() > MAX_SAFE_LOG {
        return Err(ColeHopfError::Overflow {
            max_log: max_log.as_f64(),
        });
    }

    let z: Vec<T> = log_z.iter().map(|&l| l.exp()).collect();
    let s = mollifier.convolve(&z);
    let r: Vec<T> = z.iter().zip(&s).map(|(&z, &s)| z / s).collect();
    let cutoff = T::of(f64::from(n).powf(mollifier.delta_s / 3.0));
    let r_cut: Vec<T> = r
        .iter()
        .map(|&v| {
            if cutoff * (v - T::one()).abs() <= T::one() {
                v
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(ColeHopfFields {
        t: state.t,
        z,
        s,
        r,
        r_cut,
        lambda,
        r_lambda,
    })
}

impl<T: Scalar> ColeHopfFields<T> {
    /// Whether the cutoff was inactive on the whole ring.
    pub fn cutoff_inactive(&self) -> bool {
        self.r.iter().zip(&self.r_cut).all(|(a, b)| a == b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{compute_constants, PotentialSpec};

    fn constants() -> ModelConstants<f64> {
        compute_constants(&PotentialSpec::gaussian(), &[1.0]).unwrap()
    }

    #[test]
    fn flat_interface_gives_unit_fields() {
        let c = constants();
        let state = FieldState::new(vec![0.0; 64]);
        let moll = Mollifier::bump(16, 0.1);
        let f = cole_hopf_field(&state, 16, &c, &moll).unwrap();
        for x in 0..64 {
            assert!((f.z[x] - 1.0).abs() < 1e-14);
            assert!((f.s[x] - 1.0).abs() < 1e-13);
            assert!((f.r[x] - 1.0).abs() < 1e-13);
            assert_eq!(f.r[x], f.r_cut[x]);
        }
        assert!(f.cutoff_inactive());
    }

    #[test]
    fn linear_height_exponentiates() {
        // lambda j_x = x / N  =>  Z_x = e^{x/N}
        let c = constants();
        let n = 16u32;
        let m = 64usize;
        // phi_x = sqrt(N)/(lambda N) constant gives j_x - j_{x-1} = 1/(lambda N)
        let phi = vec![(n as f64).sqrt() / (c.lambda * n as f64); m];
        let state = FieldState::new(phi);
        let moll = Mollifier::bump(4, 0.1);
        let f = cole_hopf_field(&state, n, &c, &moll).unwrap();
        for x in 0..m {
            let expected = (x as f64 / n as f64).exp();
            assert!(
                (f.z[x] - expected).abs() < 1e-12 * expected,
                "x = {x}: {} vs {expected}",
                f.z[x]
            );
        }
    }

    #[test]
    fn constant_field_makes_s_equal_z() {
        let c = constants();
        let state = FieldState::new(vec![0.0; 64]);
        let moll = Mollifier::<f64>::bump(16, 0.1);
        assert!((moll.mass() - 1.0).abs() < 1e-15);
        let f = cole_hopf_field(&state, 16, &c, &moll).unwrap();
        for x in 0..64 {
            assert!((f.s[x] - f.z[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn height_shift_covariance() {
        // adding h to all heights multiplies Z and S by e^{lambda h} and
        // leaves R, R^ invariant
        let c = constants();
        let m = 64usize;
        let phi: Vec<f64> = (0..m).map(|x| 0.3 * ((x as f64) * 0.7).sin()).collect();
        let mut state = FieldState::new(phi);
        let moll = Mollifier::bump(8, 0.1);
        let base = cole_hopf_field(&state, 16, &c, &moll).unwrap();
        let h = 1.3;
        state.j0 += h;
        let shifted = cole_hopf_field(&state, 16, &c, &moll).unwrap();
        let factor = (c.lambda * h).exp();
        for x in 0..m {
            assert!((shifted.z[x] - factor * base.z[x]).abs() < 1e-12 * shifted.z[x]);
            assert!((shifted.s[x] - factor * base.s[x]).abs() < 1e-12 * shifted.s[x]);
            assert!((shifted.r[x] - base.r[x]).abs() < 1e-13);
            assert!((shifted.r_cut[x] - base.r_cut[x]).abs() < 1e-13);
        }
    }

    #[test]
    fn cutoff_zeroes_large_deviations() {
        let c = constants();
        let n = 16u32;
        let m = 64usize;
        // steep tent: the ratio field deviates well past N^{-delta_S/3}
        let mut phi = vec![0.0; m];
        phi[10] = 40.0;
        phi[11] = -40.0;
        let state = FieldState::new(phi);
        let moll = Mollifier::bump(n, 0.1);
        let f = cole_hopf_field(&state, n, &c, &moll).unwrap();
        let cutoff = (n as f64).powf(0.1 / 3.0);
        let mut zeroed = 0;
        for x in 0..m {
            if cutoff * (f.r[x] - 1.0).abs() > 1.0 {
                assert_eq!(f.r_cut[x], 0.0);
                zeroed += 1;
            } else {
                assert_eq!(f.r_cut[x], f.r[x]);
            }
        }
        assert!(zeroed > 0, "control did not trip the cutoff");
        assert!(!f.cutoff_inactive());
    }

    #[test]
    fn overflow_is_reported() {
        let c = constants();
        let mut state = FieldState::new(vec![0.0; 64]);
        state.j0 = 100.0;
        let moll = Mollifier::bump(16, 0.1);
        assert!(matches!(
            cole_hopf_field(&state, 16, &c, &moll),
            Err(ColeHopfError::Overflow { .. })
        ));
    }
}
