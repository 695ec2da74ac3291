//! Property tests over randomly generated models: probability-mass
//! conservation, factual consistency of the empty regime, query-order
//! invariance and float/rational mode agreement.

use causal_ident_core::num::Scalar;
use causal_ident_core::scm::{
    validate_model, CausalModelSpec, Domain, NoiseSpec, Regime, StructuralFunction,
    ValidatedModel, Variable, WorldQuery,
};
use num_rational::BigRational;
use proptest::prelude::*;

/// Free parameters of a fixed four-variable chain skeleton
/// L -> A -> M -> Y with the extra edges L -> Y and A -> Y.
#[derive(Debug, Clone)]
struct Params {
    weights: Vec<Vec<u32>>,
    tables: Vec<Vec<usize>>,
}

fn skeleton() -> Vec<(&'static str, Vec<&'static str>, usize)> {
    vec![
        ("L", vec![], 3),
        ("A", vec!["L"], 2),
        ("M", vec!["A"], 2),
        ("Y", vec!["L", "A", "M"], 2),
    ]
}

fn table_len(parents: &[&str], noise: usize) -> usize {
    let sizes: std::collections::BTreeMap<&str, usize> =
        skeleton().iter().map(|(n, _, _)| (*n, 2)).collect();
    parents.iter().map(|p| sizes[p]).product::<usize>() * noise
}

fn params_strategy() -> impl Strategy<Value = Params> {
    let mut weights = Vec::new();
    let mut tables = Vec::new();
    for (_, parents, noise) in skeleton() {
        weights.push(proptest::collection::vec(1u32..100, noise));
        tables.push(proptest::collection::vec(0usize..2, table_len(&parents, noise)));
    }
    (weights, tables).prop_map(|(weights, tables)| Params { weights, tables })
}

fn build<P: Scalar>(params: &Params) -> ValidatedModel<P> {
    let variables = skeleton()
        .into_iter()
        .zip(&params.weights)
        .zip(&params.tables)
        .map(|(((name, parents, noise), w), t)| {
            let total: i64 = w.iter().map(|&x| i64::from(x)).sum();
            Variable {
                name: name.to_string(),
                domain: Domain::binary(),
                noise: NoiseSpec {
                    domain: Domain::indexed("u", noise),
                    pmf: w.iter().map(|&x| P::from_ratio(i64::from(x), total)).collect(),
                },
                func: StructuralFunction {
                    parents: parents.iter().map(|s| s.to_string()).collect(),
                    outputs: t.clone(),
                },
                observed: true,
                role: None,
            }
        })
        .collect();
    validate_model(CausalModelSpec { variables }).expect("skeleton models are valid")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_mass_is_conserved(params in params_strategy(), a in 0usize..2) {
        let model = build::<f64>(&params);
        let law = model.observed_law().unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);

        let joint = model
            .counterfactual_joint(&[
                WorldQuery::new("g", Regime::static_value("A", a), &["M", "Y"]),
                WorldQuery::factual(&["L", "A"]),
            ])
            .unwrap();
        prop_assert!((joint.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exact_mode_conserves_mass_exactly(params in params_strategy()) {
        let model = build::<BigRational>(&params);
        let law = model.observed_law().unwrap();
        prop_assert_eq!(law.total_mass(), BigRational::one());
    }

    #[test]
    fn empty_regime_world_is_the_observed_law(params in params_strategy()) {
        let model = build::<BigRational>(&params);
        let law = model.observed_law().unwrap();
        let factual = model
            .counterfactual_joint(&[WorldQuery::factual(&["L", "A", "M", "Y"])])
            .unwrap();
        prop_assert_eq!(law.mass(), factual.mass());
    }

    #[test]
    fn event_probability_is_order_invariant(params in params_strategy()) {
        let model = build::<f64>(&params);
        let law = model.observed_law().unwrap();
        let a = law.position("A", None).unwrap();
        let y = law.position("Y", None).unwrap();
        let l = law.position("L", None).unwrap();
        let forward = law.event_prob(&[(l, 1), (a, 0), (y, 1)]);
        let backward = law.event_prob(&[(y, 1), (a, 0), (l, 1)]);
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn marginalization_commutes(params in params_strategy()) {
        let model = build::<f64>(&params);
        let law = model.observed_law().unwrap();
        let a = law.position("A", None).unwrap();
        let y = law.position("Y", None).unwrap();
        let one_step = law.marginal(&[a, y]);
        let l = law.position("L", None).unwrap();
        let m = law.position("M", None).unwrap();
        let two_step = law.marginal(&[a, m, y]);
        let m2 = two_step.position("M", None).unwrap();
        let keep: Vec<usize> = (0..3).filter(|&i| i != m2).collect();
        let two_step = two_step.marginal(&keep);
        let _ = (l, m);
        for (p, q) in one_step.mass().iter().zip(two_step.mass()) {
            prop_assert!((p - q).abs() <= 1e-15);
        }
    }

    #[test]
    fn float_and_rational_modes_agree(params in params_strategy()) {
        let float = build::<f64>(&params);
        let exact = build::<BigRational>(&params);
        let fl = float.observed_law().unwrap();
        let el = exact.observed_law().unwrap();
        for (p, q) in fl.mass().iter().zip(el.mass()) {
            prop_assert!((p - q.to_f64()).abs() <= 1e-12);
        }
    }
}
