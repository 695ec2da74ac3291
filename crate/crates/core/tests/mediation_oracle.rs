//! Cross-checks of the mediation parameters and functionals against an
//! independent brute-force oracle that re-implements recursive substitution
//! and the defining sums directly.

use std::collections::BTreeMap;

use causal_ident_core::builder::{binary_cpt, model_from_cpts};
use causal_ident_core::mediation::{
    gamma_ate, gamma_nde, gamma_nie, gamma_rde, gamma_rde_w, gamma_rie, interventional_total,
    psi_cmn, psi_mediation, psi_rde, psi_rde_w, MediationFrame,
};
use causal_ident_core::witness::{w1_frame, w1_model};
use causal_ident_core::{Scalar, ValidatedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// oracle: direct recursive substitution, no shared code paths

fn oracle_eval(m: &ValidatedModel<f64>, noise: &[usize], set: &BTreeMap<&str, usize>) -> Vec<usize> {
    let vars = m.variables();
    let mut world = vec![0usize; vars.len()];
    for (i, v) in vars.iter().enumerate() {
        if let Some(&val) = set.get(v.name.as_str()) {
            world[i] = val;
            continue;
        }
        let mut idx = 0usize;
        for p in &v.func.parents {
            let j = vars.iter().position(|x| &x.name == p).unwrap();
            idx = idx * vars[j].domain.size() + world[j];
        }
        idx = idx * v.noise.domain.size() + noise[i];
        world[i] = v.func.outputs[idx];
    }
    world
}

fn oracle_for_noise(m: &ValidatedModel<f64>, mut f: impl FnMut(&[usize], f64)) {
    let vars = m.variables();
    let mut noise = vec![0usize; vars.len()];
    loop {
        let mut mass = 1.0;
        for (i, v) in vars.iter().enumerate() {
            mass *= v.noise.pmf[noise[i]];
        }
        if mass > 0.0 {
            f(&noise, mass);
        }
        // odometer increment
        let mut k = vars.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            noise[k] += 1;
            if noise[k] < vars[k].noise.domain.size() {
                break;
            }
            noise[k] = 0;
        }
    }
}

fn label_value(m: &ValidatedModel<f64>, var: &str, idx: usize) -> f64 {
    let i = m.index_of(var).unwrap();
    m.var(i).domain.labels()[idx].parse().unwrap()
}

/// E[Y^{a}] by direct enumeration.
fn oracle_mean_y(m: &ValidatedModel<f64>, set: &BTreeMap<&str, usize>) -> f64 {
    let iy = m.index_of("Y").unwrap();
    let mut acc = 0.0;
    oracle_for_noise(m, |noise, mass| {
        let w = oracle_eval(m, noise, set);
        acc += mass * label_value(m, "Y", w[iy]);
    });
    acc
}

/// E[Y^{a_outer, M^{a_inner}}] by direct two-pass enumeration.
fn oracle_nested(m: &ValidatedModel<f64>, a_outer: usize, a_inner: usize) -> f64 {
    let im = m.index_of("M").unwrap();
    let iy = m.index_of("Y").unwrap();
    let mut acc = 0.0;
    oracle_for_noise(m, |noise, mass| {
        let inner = oracle_eval(m, noise, &BTreeMap::from([("A", a_inner)]));
        let outer = oracle_eval(m, noise, &BTreeMap::from([("A", a_outer), ("M", inner[im])]));
        acc += mass * label_value(m, "Y", outer[iy]);
    });
    acc
}

/// P(V^{A=a} = ...) marginals needed for the randomized-draw analogues.
fn oracle_dist(
    m: &ValidatedModel<f64>,
    set: &BTreeMap<&str, usize>,
    vars: &[&str],
) -> BTreeMap<Vec<usize>, f64> {
    let idxs: Vec<usize> = vars.iter().map(|v| m.index_of(v).unwrap()).collect();
    let mut out = BTreeMap::new();
    oracle_for_noise(m, |noise, mass| {
        let w = oracle_eval(m, noise, set);
        let key: Vec<usize> = idxs.iter().map(|&i| w[i]).collect();
        *out.entry(key).or_insert(0.0) += mass;
    });
    out
}

/// gamma_RDE by its defining sum: sum_m pi^{a*}(m) (E[Y^{a,m}] - E[Y^{a*,m}]).
fn oracle_rde(m: &ValidatedModel<f64>) -> f64 {
    let pi_star = oracle_dist(m, &BTreeMap::from([("A", 0usize)]), &["M"]);
    let mut acc = 0.0;
    for (key, p) in pi_star {
        let mv = key[0];
        let e1 = oracle_mean_y(m, &BTreeMap::from([("A", 1), ("M", mv)]));
        let e0 = oracle_mean_y(m, &BTreeMap::from([("A", 0), ("M", mv)]));
        acc += p * (e1 - e0);
    }
    acc
}

/// gamma_RIE: sum_m (pi^{a}(m) - pi^{a*}(m)) E[Y^{a,m}].
fn oracle_rie(m: &ValidatedModel<f64>) -> f64 {
    let pi1 = oracle_dist(m, &BTreeMap::from([("A", 1usize)]), &["M"]);
    let pi0 = oracle_dist(m, &BTreeMap::from([("A", 0usize)]), &["M"]);
    let im = m.index_of("M").unwrap();
    let msize = m.var(im).domain.size();
    let mut acc = 0.0;
    for mv in 0..msize {
        let d = pi1.get(&vec![mv]).copied().unwrap_or(0.0)
            - pi0.get(&vec![mv]).copied().unwrap_or(0.0);
        acc += d * oracle_mean_y(m, &BTreeMap::from([("A", 1), ("M", mv)]));
    }
    acc
}

/// One arm of gamma_RDE-W for a model with a single post covariate "W":
/// sum_w P(W^a = w) sum_m P(M^{a*} = m | W^{a*} = w) E[Y^{a,m} | W^a = w].
fn oracle_rde_w_arm(m: &ValidatedModel<f64>, a: usize, a_star: usize) -> f64 {
    let iw = m.index_of("W").unwrap();
    let iy = m.index_of("Y").unwrap();
    let wsize = m.var(iw).domain.size();
    let w_a = oracle_dist(m, &BTreeMap::from([("A", a)]), &["W"]);
    let wm_star = oracle_dist(m, &BTreeMap::from([("A", a_star)]), &["W", "M"]);
    let w_star = oracle_dist(m, &BTreeMap::from([("A", a_star)]), &["W"]);
    let mut acc = 0.0;
    for wv in 0..wsize {
        let pw = w_a.get(&vec![wv]).copied().unwrap_or(0.0);
        if pw == 0.0 {
            continue;
        }
        let pw_star = w_star.get(&vec![wv]).copied().unwrap();
        let im = m.index_of("M").unwrap();
        for mv in 0..m.var(im).domain.size() {
            let pm = wm_star.get(&vec![wv, mv]).copied().unwrap_or(0.0) / pw_star;
            if pm == 0.0 {
                continue;
            }
            // E[Y^{a,m} | W^a = w]: joint enumeration within the same world
            let mut num = 0.0;
            let mut den = 0.0;
            oracle_for_noise(m, |noise, mass| {
                let w = oracle_eval(m, noise, &BTreeMap::from([("A", a), ("M", mv)]));
                if w[iw] == wv {
                    den += mass;
                    num += mass * label_value(m, "Y", w[iy]);
                }
            });
            acc += pw * pm * num / den;
        }
    }
    acc
}

/// Observed joint over the observed variables, by direct enumeration.
fn oracle_observed(m: &ValidatedModel<f64>) -> BTreeMap<Vec<usize>, f64> {
    let observed: Vec<&str> = m
        .variables()
        .iter()
        .filter(|v| v.observed)
        .map(|v| v.name.as_str())
        .collect();
    oracle_dist(m, &BTreeMap::new(), &observed)
}

/// Conditional mean and conditional pmf helpers over an enumerated joint.
struct Law {
    names: Vec<String>,
    mass: BTreeMap<Vec<usize>, f64>,
}

impl Law {
    fn pos(&self, n: &str) -> usize {
        self.names.iter().position(|x| x == n).unwrap()
    }

    fn prob(&self, fixed: &[(usize, usize)]) -> f64 {
        self.mass
            .iter()
            .filter(|(k, _)| fixed.iter().all(|&(i, v)| k[i] == v))
            .map(|(_, p)| p)
            .sum()
    }

    fn mean(&self, var: usize, values: &[f64], fixed: &[(usize, usize)]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, p) in &self.mass {
            if fixed.iter().all(|&(i, v)| k[i] == v) {
                den += p;
                num += p * values[k[var]];
            }
        }
        num / den
    }
}

fn w1_law() -> Law {
    let m = w1_model::<f64>();
    Law {
        names: vec!["A".into(), "W".into(), "M".into(), "Y".into()],
        mass: oracle_observed(&m),
    }
}

/// Psi_RDE(-W) by the defining double sum over (w, m).
fn oracle_psi_rde_arm(law: &Law, a: usize, a_star: usize, w_conditional: bool) -> f64 {
    let (ia, iw, im, iy) = (law.pos("A"), law.pos("W"), law.pos("M"), law.pos("Y"));
    let yvals = [0.0, 1.0];
    let mut acc = 0.0;
    for wv in 0..2 {
        let pw = law.prob(&[(ia, a), (iw, wv)]) / law.prob(&[(ia, a)]);
        for mv in 0..2 {
            let pm = if w_conditional {
                law.prob(&[(ia, a_star), (iw, wv), (im, mv)])
                    / law.prob(&[(ia, a_star), (iw, wv)])
            } else {
                law.prob(&[(ia, a_star), (im, mv)]) / law.prob(&[(ia, a_star)])
            };
            let ey = law.mean(iy, &yvals, &[(ia, a), (iw, wv), (im, mv)]);
            acc += pw * pm * ey;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// random model generation (no post-treatment covariate, no latents)

fn random_lamy_model(rng: &mut ChaCha8Rng) -> ValidatedModel<f64> {
    let p = |rng: &mut ChaCha8Rng| rng.gen_range(0.05..0.95);
    let row = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| p(rng)).collect::<Vec<f64>>();
    model_from_cpts(vec![
        binary_cpt("L", &[], &row(rng, 1)),
        binary_cpt("A", &["L"], &row(rng, 2)),
        binary_cpt("M", &["L", "A"], &row(rng, 4)),
        binary_cpt("Y", &["L", "A", "M"], &row(rng, 8)),
    ])
    .unwrap()
}

fn lamy_frame() -> MediationFrame {
    MediationFrame {
        baseline: vec!["L".into()],
        treatment: "A".into(),
        post: vec![],
        mediator: "M".into(),
        outcome: "Y".into(),
        a: 1,
        a_star: 0,
    }
}

// ---------------------------------------------------------------------------
// tests

const TOL: f64 = 1e-12;

#[test]
fn w1_counterfactual_means_match_oracle() {
    let m = w1_model::<f64>();
    let f = w1_frame();
    let ate = oracle_mean_y(&m, &BTreeMap::from([("A", 1)]))
        - oracle_mean_y(&m, &BTreeMap::from([("A", 0)]));
    assert!((gamma_ate(&m, &f).unwrap() - ate).abs() < TOL);
    let nde = oracle_nested(&m, 1, 0) - oracle_nested(&m, 0, 0);
    let nie = oracle_nested(&m, 1, 1) - oracle_nested(&m, 1, 0);
    assert!((gamma_nde(&m, &f).unwrap() - nde).abs() < TOL);
    assert!((gamma_nie(&m, &f).unwrap() - nie).abs() < TOL);
    assert!((gamma_rde(&m, &f).unwrap() - oracle_rde(&m)).abs() < TOL);
    assert!((gamma_rie(&m, &f).unwrap() - oracle_rie(&m)).abs() < TOL);
    let rde_w = oracle_rde_w_arm(&m, 1, 0) - oracle_rde_w_arm(&m, 0, 0);
    assert!((gamma_rde_w(&m, &f).unwrap() - rde_w).abs() < TOL);
}

#[test]
fn w1_functionals_match_oracle() {
    let m = w1_model::<f64>();
    let f = w1_frame();
    let model_law = m.observed_law().unwrap();
    let law = w1_law();
    let psi1 = psi_rde(&model_law, &f, 1, 0).unwrap();
    let o1 = oracle_psi_rde_arm(&law, 1, 0, false) - oracle_psi_rde_arm(&law, 0, 0, false);
    assert!((psi1 - o1).abs() < TOL);
    let psi2 = psi_rde_w(&model_law, &f, 1, 0).unwrap();
    let o2 = oracle_psi_rde_arm(&law, 1, 0, true) - oracle_psi_rde_arm(&law, 0, 0, true);
    assert!((psi2 - o2).abs() < TOL);
}

#[test]
fn w1_single_world_identification_holds() {
    // W1 lies in the single-world class, so the randomized-draw parameters
    // must coincide with their observed-data functionals.
    let m = w1_model::<f64>();
    let f = w1_frame();
    let law = m.observed_law().unwrap();
    assert!((gamma_rde(&m, &f).unwrap() - psi_rde(&law, &f, 1, 0).unwrap()).abs() < 1e-9);
    assert!((gamma_rde_w(&m, &f).unwrap() - psi_rde_w(&law, &f, 1, 0).unwrap()).abs() < 1e-9);
}

#[test]
fn w1_cross_world_gap_is_frozen() {
    // The natural direct effect differs from the W-conditional functional:
    // exact rational values frozen from the defining sums.
    use num_rational::BigRational;
    let m = w1_model::<BigRational>();
    let f = w1_frame();
    let nde = gamma_nde(&m, &f).unwrap();
    let psi = psi_rde_w(&m.observed_law().unwrap(), &f, 1, 0).unwrap();
    let gap = (nde.clone() - psi.clone()).abs();
    assert!(gap.is_positive(), "nde = {nde}, psi = {psi}");
    assert_eq!(nde, BigRational::from_ratio(7, 40), "nde = {nde}");
    assert_eq!(psi, BigRational::from_ratio(19, 100), "psi = {psi}");
    // frozen from the f64 oracle; exact values must agree to print precision
    let nde64 = oracle_nested(&w1_model::<f64>(), 1, 0) - oracle_nested(&w1_model::<f64>(), 0, 0);
    assert!((nde.to_f64() - nde64).abs() < TOL);
    insta_check(nde.to_f64(), psi.to_f64(), gap.to_f64());
}

// expected values frozen after first oracle run
fn insta_check(nde: f64, psi: f64, gap: f64) {
    let msg = format!("nde = {nde:.17}, psi = {psi:.17}, gap = {gap:.17}");
    assert!((nde - FROZEN_NDE).abs() < 1e-12, "{msg}");
    assert!((psi - FROZEN_PSI).abs() < 1e-12, "{msg}");
    assert!((gap - FROZEN_GAP).abs() < 1e-12, "{msg}");
}

const FROZEN_NDE: f64 = 0.175; // 7/40
const FROZEN_PSI: f64 = 0.19; // 19/100
const FROZEN_GAP: f64 = 0.015; // 3/200

#[test]
fn effects_decompose_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(causal_ident_core::DEFAULT_SEED);
    for _ in 0..50 {
        let m = random_lamy_model(&mut rng);
        let f = lamy_frame();
        let ate = gamma_ate(&m, &f).unwrap();
        let nde = gamma_nde(&m, &f).unwrap();
        let nie = gamma_nie(&m, &f).unwrap();
        assert!((nde + nie - ate).abs() < 1e-10);
        let rde = gamma_rde(&m, &f).unwrap();
        let rie = gamma_rie(&m, &f).unwrap();
        let total = interventional_total(&m, &f).unwrap();
        assert!((rde + rie - total).abs() < 1e-10);
    }
}

#[test]
fn markovian_models_identify_all_parameters() {
    // Without post-treatment covariates or latents the cross-world class
    // holds, so every parameter matches its observed-data functional.
    let mut rng = ChaCha8Rng::seed_from_u64(causal_ident_core::DEFAULT_SEED ^ 0xabcd);
    for _ in 0..50 {
        let m = random_lamy_model(&mut rng);
        let f = lamy_frame();
        let law = m.observed_law().unwrap();
        let ate = gamma_ate(&m, &f).unwrap();
        assert!((ate - psi_cmn(&law, &f).unwrap()).abs() < 1e-9);
        let nde = gamma_nde(&m, &f).unwrap();
        assert!((nde - psi_mediation(&law, &f).unwrap()).abs() < 1e-9);
        // with empty W the two randomized functionals coincide with the nde
        assert!((gamma_rde(&m, &f).unwrap() - psi_rde(&law, &f, 1, 0).unwrap()).abs() < 1e-9);
        assert!((gamma_rde_w(&m, &f).unwrap() - psi_rde_w(&law, &f, 1, 0).unwrap()).abs() < 1e-9);
    }
}
