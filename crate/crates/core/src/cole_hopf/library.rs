//! Catalog of the local functions appearing in the exponentiated-field
//! evolution, each with its one-sided window and verified jet order.
//!
//! Windows are shifted into `{1..l}` (or kept in `{-l..0}`) so every entry is
//! block-averageable; tilted expectations are translation invariant, so the
//! shifts do not affect jet orders.

use super::ColeHopfError;
use crate::potential::{ensemble_moment, Ensemble, LocalFn, ModelConstants, PolyTerm};
use crate::scalar::Scalar;

/// Product terms of the drift nonlinearity `F`, shifted by `shift`.
fn f_terms<T: Scalar>(
    c: &ModelConstants<T>,
    shift: i64,
    quadratic: bool,
    higher: bool,
) -> Vec<PolyTerm<T>> {
    let mut terms = Vec::new();
    if quadratic {
        let third = T::of(1.0 / 3.0) * c.beta2();
        for w in [-1i64, 0, 1] {
            terms.push(PolyTerm::new(
                third,
                vec![(w + shift, 0, 1), (w + 1 + shift, 0, 1)],
            ));
        }
    }
    if higher {
        for d in 3..=c.deg {
            let beta_d = c.beta_d(d);
            if beta_d == T::zero() {
                continue;
            }
            for k in 0..=(d as i64) {
                let factors: Vec<(i64, u8, u8)> = (1..=(d as i64))
                    .map(|l| (l - k + shift, 0, 1))
                    .collect();
                terms.push(PolyTerm::new(beta_d, factors));
            }
        }
    }
    terms
}

/// Multiply every term by `phi` factors at the given (already shifted) sites.
fn times_phi<T: Scalar>(terms: &[PolyTerm<T>], sites: &[i64]) -> Vec<PolyTerm<T>> {
    terms
        .iter()
        .map(|t| {
            let mut factors: Vec<(i64, u8, u8)> = t
                .factors
                .iter()
                .map(|f| (f.site, f.phi_pow, f.du_pow))
                .collect();
            for &s in sites {
                factors.push((s, 1, 0));
            }
            PolyTerm::new(t.coeff, factors)
        })
        .collect()
}

/// The local-function catalog, with jet orders as classified for the model:
///
/// | entry                        | jet | window        |
/// |------------------------------|-----|---------------|
/// | renormalized quadratic       |  2  | right `{1,2}` |
/// | `V' = U' - alpha phi`        |  1  | left `{0}`    |
/// | `U'[phi] phi - 1`            |  1  | left `{0}`    |
/// | `alpha phi^2 - 1`            |  0  | left `{0}`    |
/// | `U'[phi]`                    |  0  | left `{0}`    |
/// | `F - E0[F]`                  |  0  | right         |
/// | `F - F(shifted)`             |  2  | right         |
/// | telescoping gradient `G`     |  1  | right `{1..5}`|
/// | `G phi_1 - 1`                |  0  | right `{1..5}`|
/// | `F_{>2}` (deg >= 3)          |  2  | right         |
/// | `F_{>2} phi_w`, two-phi form | 1,0 | right         |
pub fn local_fn_library<T: Scalar>(
    ens0: &Ensemble<T>,
    c: &ModelConstants<T>,
) -> Result<Vec<LocalFn<T>>, ColeHopfError> {
    let half = T::of(0.5);
    let one = T::one();
    let deg = c.deg as i64;
    let mut lib = Vec::new();

    // (1) Q[phi] = beta2/2 U'_0 U'_1 - lambda/2 (U'_0 phi_0 - 1), shifted by 1
    lib.push(LocalFn::poly(
        "quadratic-renorm",
        2,
        2,
        vec![
            PolyTerm::new(half * c.beta2(), vec![(1, 0, 1), (2, 0, 1)]),
            PolyTerm::new(-half * c.lambda, vec![(1, 1, 1)]),
            PolyTerm::new(half * c.lambda, vec![]),
        ],
    ));

    // (2) V'[phi_0] = U'[phi_0] - alpha phi_0
    lib.push(LocalFn::poly(
        "centered-uprime",
        1,
        1,
        vec![
            PolyTerm::new(one, vec![(0, 0, 1)]),
            PolyTerm::new(-c.alpha, vec![(0, 1, 0)]),
        ],
    ));

    // (3) U'[phi_0] phi_0 - 1
    lib.push(LocalFn::poly(
        "uprime-phi",
        1,
        1,
        vec![
            PolyTerm::new(one, vec![(0, 1, 1)]),
            PolyTerm::new(-one, vec![]),
        ],
    ));

    // (4) alpha phi_0^2 - 1
    lib.push(LocalFn::poly(
        "centered-square",
        0,
        0,
        vec![
            PolyTerm::new(c.alpha, vec![(0, 2, 0)]),
            PolyTerm::new(-one, vec![]),
        ],
    ));

    // (5) U'[phi_0]
    lib.push(LocalFn::poly(
        "uprime",
        0,
        0,
        vec![PolyTerm::new(one, vec![(0, 0, 1)])],
    ));

    // (6) F - E0[F], shifted fully to the right
    {
        let mut terms = f_terms(c, deg, true, true);
        let f_poly = LocalFn::poly("nonlinearity", 0, 0, terms.clone());
        let mean0 = ensemble_moment(ens0, &f_poly)?;
        terms.push(PolyTerm::new(-mean0, vec![]));
        lib.push(LocalFn::poly("nonlinearity-centered", 0, 0, terms));
    }

    // (7) F - F(tau_1 .), shifted fully to the right
    {
        let mut terms = f_terms(c, deg, true, true);
        for t in f_terms(c, deg + 1, true, true) {
            terms.push(PolyTerm::new(-t.coeff, t
                .factors
                .iter()
                .map(|f| (f.site, f.phi_pow, f.du_pow))
                .collect()));
        }
        lib.push(LocalFn::poly("nonlinearity-gradient", 2, 2, terms));
    }

    // (8) G[phi] = phi_2 U'_2 (U'_1 - U'_3) + phi_2 (U'_4 U'_5 - U'_3 U'_4)
    let g_terms = |extra: &[i64]| -> Vec<PolyTerm<T>> {
        let base = vec![
            PolyTerm::new(one, vec![(2, 1, 1), (1, 0, 1)]),
            PolyTerm::new(-one, vec![(2, 1, 1), (3, 0, 1)]),
            PolyTerm::new(one, vec![(2, 1, 0), (4, 0, 1), (5, 0, 1)]),
            PolyTerm::new(-one, vec![(2, 1, 0), (3, 0, 1), (4, 0, 1)]),
        ];
        times_phi(&base, extra)
    };
    lib.push(LocalFn::poly("telescoping-gradient", 1, 1, g_terms(&[])));

    // (9) G phi_1 - 1
    {
        let mut terms = g_terms(&[1]);
        terms.push(PolyTerm::new(-one, vec![]));
        lib.push(LocalFn::poly("telescoping-gradient-phi", 0, 0, terms));
    }

    if c.deg >= 3 {
        // (10) F_{>2}
        lib.push(LocalFn::poly(
            "nonlinearity-cubic",
            2,
            2,
            f_terms(c, deg, false, true),
        ));
        // (11) F_{>2} phi_1 and F_{>2} phi_1 phi_2
        let base = f_terms(c, deg, false, true);
        lib.push(LocalFn::poly(
            "nonlinearity-cubic-phi",
            1,
            1,
            times_phi(&base, &[1]),
        ));
        lib.push(LocalFn::poly(
            "nonlinearity-cubic-phi-phi",
            0,
            0,
            times_phi(&base, &[1, 2]),
        ));
    }
    Ok(lib)
}

/// Negative control: `alpha phi^2` deliberately mis-tagged as jet order 0.
/// Its mean at sigma = 0 is 1, so any honest jet check must fail it.
pub fn mis_tagged_control<T: Scalar>(c: &ModelConstants<T>) -> LocalFn<T> {
    LocalFn::poly(
        "mis-tagged-square",
        0,
        0,
        vec![PolyTerm::new(c.alpha, vec![(0, 2, 0)])],
    )
}
