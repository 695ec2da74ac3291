//! Hand-built witness models used by tests, the slippage audit and the
//! shipped example specs.

use crate::builder::{binary_cpt, model_from_cpts, CptVar};
use crate::longitudinal::LongitudinalFrame;
use crate::mediation::MediationFrame;
use crate::num::Scalar;
use crate::scm::{Domain, Regime, Rule, ValidatedModel};

/// Point-treatment mediation witness: treatment is randomized and a latent
/// `U` drives both the post-treatment covariate `W` and the outcome `Y`.
///
/// The model satisfies A1.1 (randomization), A1.2 (conditioning on the
/// realized `W` under `A = a` blocks `U` from the mediator, whose own error
/// is independent) and A1.3, so it lies in the single-world class. The
/// cross-world assumption A2.2 fails: given factual `W`, the mediator's
/// other-world value still co-varies with `Y^{a,m}` through `U`.
pub fn w1_model<P: Scalar>() -> ValidatedModel<P> {
    let r = |n: i64, d: i64| P::from_ratio(n, d);
    // P(Y=1 | a, w, m, u) = 1/20 + 3a/20 + 2w/20 + 4m/20 + 9u/20
    let mut y_rows = Vec::with_capacity(16);
    for a in 0..2i64 {
        for w in 0..2i64 {
            for m in 0..2i64 {
                for u in 0..2i64 {
                    y_rows.push(r(1 + 3 * a + 2 * w + 4 * m + 9 * u, 20));
                }
            }
        }
    }
    model_from_cpts(vec![
        binary_cpt("U", &[], &[r(1, 2)]).latent(),
        binary_cpt("A", &[], &[r(1, 2)]),
        binary_cpt("W", &["A", "U"], &[r(1, 5), r(7, 10), r(1, 2), r(9, 10)]),
        binary_cpt("M", &["A", "W"], &[r(3, 10), r(3, 5), r(1, 2), r(4, 5)]),
        CptVar::new(
            "Y",
            Domain::binary(),
            &["A", "W", "M", "U"],
            y_rows
                .into_iter()
                .map(|p| vec![P::one() - p.clone(), p])
                .collect(),
        ),
    ])
    .expect("w1 witness model is valid")
}

/// The mediation frame matching [`w1_model`].
pub fn w1_frame() -> MediationFrame {
    MediationFrame {
        baseline: vec![],
        treatment: "A".into(),
        post: vec!["W".into()],
        mediator: "M".into(),
        outcome: "Y".into(),
        a: 1,
        a_star: 0,
    }
}

/// Two-interval longitudinal witness: a latent `H` is a common cause of the
/// two treatments only, touching no covariate or outcome equation.
///
/// Given measured history the covariates and outcome are randomized with
/// respect to each treatment (B1.4 holds), but the future natural treatment
/// value is not (B1.3 fails through `H`). Natural-value regime means
/// therefore diverge from the extended g-formula, while factual-draw
/// stochastic regime means coincide with it.
pub fn w2_model<P: Scalar>() -> ValidatedModel<P> {
    let r = |n: i64, d: i64| P::from_ratio(n, d);
    model_from_cpts(vec![
        binary_cpt("H", &[], &[r(1, 2)]).latent(),
        binary_cpt("L0", &[], &[r(2, 5)]),
        binary_cpt("A0", &["H", "L0"], &[r(3, 10), r(1, 2), r(3, 5), r(4, 5)]),
        binary_cpt("L1", &["L0", "A0"], &[r(1, 4), r(7, 10), r(2, 5), r(4, 5)]),
        binary_cpt(
            "A1",
            &["H", "A0", "L1"],
            &[r(1, 5), r(2, 5), r(3, 10), r(1, 2), r(1, 2), r(7, 10), r(3, 5), r(9, 10)],
        ),
        binary_cpt(
            "Y",
            &["A0", "L1", "A1"],
            &[r(1, 10), r(3, 10), r(1, 4), r(1, 2), r(2, 5), r(7, 10), r(3, 5), r(9, 10)],
        ),
    ])
    .expect("w2 witness model is valid")
}

/// The longitudinal frame matching [`w2_model`].
pub fn w2_frame() -> LongitudinalFrame {
    LongitudinalFrame {
        covariates: vec![vec!["L0".into()], vec!["L1".into()]],
        treatments: vec!["A0".into(), "A1".into()],
        outcome: "Y".into(),
    }
}

/// The shift regime flipping the natural treatment value at each interval.
pub fn w2_shift_regime<P: Scalar>() -> Regime<P> {
    Regime::empty()
        .set(
            "A0",
            Rule::NaturalValueDynamic {
                args: vec![],
                table: vec![1, 0],
            },
        )
        .set(
            "A1",
            Rule::NaturalValueDynamic {
                args: vec![],
                table: vec![1, 0],
            },
        )
}
