//! Acceptance gate: the ten headline criteria, one per test, each printing a
//! single pass/fail line (visible with `--nocapture`). Tolerances are pinned
//! here and should not be loosened.

use causal_ident_core::builder::{binary_cpt, model_from_cpts};
use causal_ident_core::identification::{
    audit_slippage, class_m1, class_m2, find_counterexample, mediation_skeleton_frame,
    sample_model, AuditConfig, FunctionalSelector, ParameterSelector,
};
use causal_ident_core::longitudinal::{
    check_b, compute_q_tilde, extended_g_formula, incremental_ps_regime, mtp_parameters,
    regime_mean, Phi,
};
use causal_ident_core::mediation::{
    check_m1, check_m2, gamma_ate, gamma_nde, gamma_nie, gamma_rde, gamma_rde_w, psi_rde,
    psi_rde_w, MediationFrame,
};
use causal_ident_core::num::Scalar;
use causal_ident_core::scm::{Regime, ValidatedModel, WorldQuery};
use causal_ident_core::witness::{w2_frame, w2_model, w2_shift_regime};
use causal_ident_core::DEFAULT_SEED;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {n:>2} ({name}): {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------------------
// shared generators (integer-ratio probabilities so float and rational modes
// build the same model from the same draws)

fn ratio_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(5..95)).collect()
}

fn lamy_from_rows<P: Scalar>(rows: &[i64]) -> ValidatedModel<P> {
    let r = |i: usize| P::from_ratio(rows[i], 100);
    let seg = |from: usize, n: usize| (0..n).map(|k| r(from + k)).collect::<Vec<P>>();
    model_from_cpts(vec![
        binary_cpt("L", &[], &seg(0, 1)),
        binary_cpt("A", &["L"], &seg(1, 2)),
        binary_cpt("M", &["L", "A"], &seg(3, 4)),
        binary_cpt("Y", &["L", "A", "M"], &seg(7, 8)),
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

fn random_long_model(rng: &mut ChaCha8Rng) -> ValidatedModel<f64> {
    let p = |rng: &mut ChaCha8Rng| rng.gen_range(0.05..0.95);
    let row = |rng: &mut ChaCha8Rng, n: usize| (0..n).map(|_| p(rng)).collect::<Vec<f64>>();
    model_from_cpts(vec![
        binary_cpt("L0", &[], &row(rng, 1)),
        binary_cpt("A0", &["L0"], &row(rng, 2)),
        binary_cpt("L1", &["L0", "A0"], &row(rng, 4)),
        binary_cpt("A1", &["A0", "L1"], &row(rng, 4)),
        binary_cpt("Y", &["A0", "L1", "A1"], &row(rng, 8)),
    ])
    .unwrap()
}

// ---------------------------------------------------------------------------
// closed-form oracle over the binary recanting-witness family (W | A,U;
// M | A,W; Y | A,M,U with each CPT entry in {eps, 1-eps}); used to confirm
// the counterexample-search gap floors independently of the engine

struct Family {
    pw: [f64; 4],
    pm: [f64; 4],
    py: [f64; 8],
}

impl Family {
    fn w(&self, a: usize, u: usize, w: usize) -> f64 {
        if w == 1 { self.pw[a * 2 + u] } else { 1.0 - self.pw[a * 2 + u] }
    }
    fn m(&self, a: usize, w: usize, m: usize) -> f64 {
        if m == 1 { self.pm[a * 2 + w] } else { 1.0 - self.pm[a * 2 + w] }
    }
    fn y(&self, a: usize, m: usize, u: usize) -> f64 {
        self.py[(a * 2 + m) * 2 + u]
    }

    /// P(M^a = m | U = u), mixing over W^a.
    fn mediator_given_u(&self, a: usize, m: usize, u: usize) -> f64 {
        (0..2).map(|w| self.w(a, u, w) * self.m(a, w, m)).sum()
    }

    /// P(M^a = m) marginally.
    fn mediator_marginal(&self, a: usize, m: usize) -> f64 {
        (0..2).map(|u| 0.5 * self.mediator_given_u(a, m, u)).sum()
    }

    fn oracle_nde(&self) -> f64 {
        let arm = |a: usize| -> f64 {
            let mut total = 0.0;
            for u in 0..2 {
                for m in 0..2 {
                    total += 0.5 * self.mediator_given_u(0, m, u) * self.y(a, m, u);
                }
            }
            total
        };
        arm(1) - arm(0)
    }

    /// E[Y^{a, G}] with the mediator drawn independently from pi.
    fn randomized_mean(&self, a: usize, pi: [f64; 2]) -> f64 {
        let mut total = 0.0;
        for m in 0..2 {
            for u in 0..2 {
                total += pi[m] * 0.5 * self.y(a, m, u);
            }
        }
        total
    }

    fn oracle_rde_plus_rie_minus_ate(&self) -> f64 {
        let pi0 = [self.mediator_marginal(0, 0), self.mediator_marginal(0, 1)];
        let pi1 = [self.mediator_marginal(1, 0), self.mediator_marginal(1, 1)];
        let rde = self.randomized_mean(1, pi0) - self.randomized_mean(0, pi0);
        let rie = self.randomized_mean(1, pi1) - self.randomized_mean(1, pi0);
        let mut ate = 0.0;
        for u in 0..2 {
            for m in 0..2 {
                ate += 0.5
                    * (self.mediator_given_u(1, m, u) * self.y(1, m, u)
                        - self.mediator_given_u(0, m, u) * self.y(0, m, u));
            }
        }
        rde + rie - ate
    }

    fn oracle_psi_rde_w(&self) -> f64 {
        let f_w = |a: usize, w: usize| 0.5 * self.w(a, 0, w) + 0.5 * self.w(a, 1, w);
        let e_y = |a: usize, w: usize, m: usize| {
            let p0 = 0.5 * self.w(a, 0, w);
            let p1 = 0.5 * self.w(a, 1, w);
            (p0 * self.y(a, m, 0) + p1 * self.y(a, m, 1)) / (p0 + p1)
        };
        let arm = |a: usize, a_star: usize| -> f64 {
            let mut s = 0.0;
            for w in 0..2 {
                for m in 0..2 {
                    s += e_y(a, w, m) * self.m(a_star, w, m) * f_w(a, w);
                }
            }
            s
        };
        arm(1, 0) - arm(0, 0)
    }
}

fn grid_max(objective: impl Fn(&Family) -> f64) -> f64 {
    let eps = 0.05;
    let level = |bit: usize| if bit == 1 { 1.0 - eps } else { eps };
    let mut best = -1.0f64;
    for wbits in 0..16usize {
        let pw = std::array::from_fn(|i| level((wbits >> i) & 1));
        for mbits in 0..16usize {
            let pm = std::array::from_fn(|i| level((mbits >> i) & 1));
            for ybits in 0..256usize {
                let py = std::array::from_fn(|i| level((ybits >> i) & 1));
                best = best.max(objective(&Family { pw, pm, py }).abs());
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// criteria

#[test]
fn criterion_01_consistency_and_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0xAC01);
    let mut max_dev = 0.0f64;
    for i in 0..200 {
        let rows = ratio_rows(&mut rng, 15);
        let m: ValidatedModel<f64> = lamy_from_rows(&rows);
        let law = m.observed_law().unwrap();
        max_dev = max_dev.max((law.total_mass() - 1.0).abs());
        let joint = m
            .counterfactual_joint(&[
                WorldQuery::new("g", Regime::static_value("A", i % 2), &["M", "Y"]),
                WorldQuery::factual(&["L", "A"]),
            ])
            .unwrap();
        max_dev = max_dev.max((joint.total_mass() - 1.0).abs());
        if i < 50 {
            // exactness and factual consistency in rational mode
            let m: ValidatedModel<BigRational> = lamy_from_rows(&rows);
            let law = m.observed_law().unwrap();
            assert_eq!(law.total_mass(), <BigRational as Scalar>::one());
            let factual = m
                .counterfactual_joint(&[WorldQuery::factual(&["L", "A", "M", "Y"])])
                .unwrap();
            assert_eq!(law.mass(), factual.mass());
        }
    }
    verdict(
        1,
        "consistency & conservation",
        max_dev <= 1e-12,
        &format!("200 models; max float mass deviation {max_dev:.3e}; rational exact on 50"),
    );
}

#[test]
fn criterion_02_natural_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0xAC02);
    let frame = lamy_frame();
    let mut max_gap = 0.0f64;
    for _ in 0..200 {
        let m: ValidatedModel<f64> = lamy_from_rows(&ratio_rows(&mut rng, 15));
        let nde = gamma_nde(&m, &frame).unwrap();
        let nie = gamma_nie(&m, &frame).unwrap();
        let ate = gamma_ate(&m, &frame).unwrap();
        max_gap = max_gap.max((nde + nie - ate).abs());
    }
    verdict(
        2,
        "natural decomposition",
        max_gap <= 1e-10,
        &format!("200 models; max |NDE+NIE-ATE| = {max_gap:.3e}"),
    );
}

#[test]
fn criterion_03_m2_concordance() {
    let class = class_m2(1e-9);
    let frame = mediation_skeleton_frame();
    let mut max_gap = 0.0f64;
    for i in 0..100 {
        let m = sample_model::<f64>(&class, DEFAULT_SEED.wrapping_add(0xAC03 + i)).unwrap();
        assert!(check_m2(&m, &frame, 1e-9).unwrap().holds, "draw {i}");
        let nde = gamma_nde(&m, &frame).unwrap();
        let psi = psi_rde_w(&m.observed_law().unwrap(), &frame, frame.a, frame.a_star).unwrap();
        let rde_w = gamma_rde_w(&m, &frame).unwrap();
        max_gap = max_gap.max((nde - psi).abs()).max((nde - rde_w).abs());
    }
    verdict(
        3,
        "M2 concordance",
        max_gap <= 1e-9,
        &format!("100 models; max gap {max_gap:.3e}"),
    );
}

#[test]
fn criterion_04_m1_identification() {
    let class = class_m1(1e-9);
    let frame = mediation_skeleton_frame();
    let mut max_gap = 0.0f64;
    for i in 0..100 {
        let m = sample_model::<f64>(&class, DEFAULT_SEED.wrapping_add(0xAC04 + i)).unwrap();
        assert!(check_m1(&m, &frame, 1e-9).unwrap().holds, "draw {i}");
        let law = m.observed_law().unwrap();
        let g_rde = gamma_rde(&m, &frame).unwrap();
        let p_rde = psi_rde(&law, &frame, frame.a, frame.a_star).unwrap();
        let g_rde_w = gamma_rde_w(&m, &frame).unwrap();
        let p_rde_w = psi_rde_w(&law, &frame, frame.a, frame.a_star).unwrap();
        max_gap = max_gap.max((g_rde - p_rde).abs()).max((g_rde_w - p_rde_w).abs());
    }
    verdict(
        4,
        "M1 identification",
        max_gap <= 1e-9,
        &format!("100 models; max gap {max_gap:.3e}"),
    );
}

#[test]
fn criterion_05_non_identification_witness() {
    let floor = grid_max(|f| f.oracle_nde() - f.oracle_psi_rde_w());
    assert!(floor >= 0.05, "oracle grid only reaches {floor}");
    let frame = mediation_skeleton_frame();
    let out = find_counterexample(
        &ParameterSelector::Nde(frame.clone()),
        &FunctionalSelector::RdeW(frame),
        &class_m1(1e-9),
        50_000,
        DEFAULT_SEED,
        Some(0.05),
    )
    .unwrap();
    verdict(
        5,
        "non-identification witness",
        out.gap >= 0.05,
        &format!(
            "oracle-confirmed floor {floor:.4}; search gap {:.4} in {} evaluations",
            out.gap, out.evaluations
        ),
    );
}

#[test]
fn criterion_06_interventional_non_decomposition() {
    let floor = grid_max(Family::oracle_rde_plus_rie_minus_ate);
    assert!(floor >= 0.02, "oracle grid only reaches {floor}");
    let frame = mediation_skeleton_frame();
    let gamma = ParameterSelector::Sum(
        Box::new(ParameterSelector::Rde(frame.clone())),
        Box::new(ParameterSelector::Rie(frame.clone())),
    );
    let psi = FunctionalSelector::CausalParam(Box::new(ParameterSelector::Ate(frame)));
    let out = find_counterexample(&gamma, &psi, &class_m1(1e-9), 50_000, DEFAULT_SEED, Some(0.02))
        .unwrap();
    verdict(
        6,
        "interventional non-decomposition",
        out.gap >= 0.02,
        &format!(
            "oracle-confirmed floor {floor:.4}; search gap {:.4} in {} evaluations",
            out.gap, out.evaluations
        ),
    );
}

#[test]
fn criterion_07_canonical_slippage_audit() {
    let frame = mediation_skeleton_frame();
    let config = AuditConfig {
        n: 100,
        budget: 50_000,
        tol: 1e-9,
        gap_floor: 0.01,
        seed: DEFAULT_SEED,
        early_stop: None,
    };
    let report = audit_slippage(
        &class_m1(1e-9),
        &class_m2(1e-9),
        &ParameterSelector::RdeW(frame.clone()),
        &ParameterSelector::Nde(frame.clone()),
        &FunctionalSelector::RdeW(frame.clone()),
        &FunctionalSelector::RdeW(frame),
        &config,
    )
    .unwrap();
    let detail: Vec<String> = report
        .conditions
        .iter()
        .map(|c| format!("{}={}", c.name, if c.holds { "ok" } else { "FAIL" }))
        .collect();
    verdict(
        7,
        "canonical slippage audit",
        report.all_hold,
        &detail.join(", "),
    );
}

#[test]
fn criterion_08_longitudinal_concordance_and_divergence() {
    let frame = w2_frame();
    let shift = w2_shift_regime::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0xAC08);
    let mut max_gap = 0.0f64;
    for _ in 0..50 {
        let m = random_long_model(&mut rng);
        let vals = mtp_parameters(&m, &frame, &shift, &Phi::RegimePushforward).unwrap();
        let q = compute_q_tilde(&m, &frame, &shift).unwrap();
        let psi = extended_g_formula(&m.observed_law().unwrap(), &frame, &q).unwrap();
        for v in [vals.mtp, vals.mtp_si_g1, vals.mtp_si] {
            max_gap = max_gap.max((v - psi).abs());
        }
    }
    // hidden-common-cause witness: the factual-draw parameter is what the
    // g-formula computes, while the natural-value parameter diverges
    let m = w2_model::<f64>();
    let vals = mtp_parameters(&m, &frame, &shift, &Phi::RegimePushforward).unwrap();
    let psi = FunctionalSelector::GFormula {
        frame: frame.clone(),
        regime: shift,
    }
    .evaluate(&m)
    .unwrap();
    let si_gap = (vals.mtp_si - psi).abs();
    let divergence = (vals.mtp - psi).abs();
    let ok = max_gap <= 1e-9 && si_gap <= 1e-9 && divergence >= 0.005;
    verdict(
        8,
        "longitudinal concordance",
        ok,
        &format!(
            "50 models max gap {max_gap:.3e}; witness si gap {si_gap:.3e}, divergence {divergence:.4} (floor 0.005)"
        ),
    );
}

#[test]
fn criterion_09_incremental_propensity_score() {
    let m = w2_model::<f64>();
    let frame = w2_frame();
    let law = m.observed_law().unwrap();

    // beta = 1 is the identity: the g-formula returns E[Y]
    let identity = incremental_ps_regime(&law, &frame, 1.0).unwrap();
    let q = compute_q_tilde(&m, &frame, &identity).unwrap();
    let psi = extended_g_formula(&law, &frame, &q).unwrap();
    let iy = law.position("Y", None).unwrap();
    let mean_y = law.expectation(iy).unwrap();
    let fixpoint_gap = (psi - mean_y).abs();

    // strict monotonicity of q(1|.) in beta at every history with p in (0,1)
    let betas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let regimes: Vec<Regime<f64>> = betas
        .iter()
        .map(|&b| incremental_ps_regime(&law, &frame, b).unwrap())
        .collect();
    let mut monotone = true;
    for t in 0..frame.intervals() {
        let name = &frame.treatments[t];
        let tables: Vec<&Vec<Vec<f64>>> = regimes
            .iter()
            .map(|r| match &r.rules[name] {
                causal_ident_core::scm::Rule::Stochastic { table, .. } => table,
                _ => unreachable!("incremental regimes are stochastic"),
            })
            .collect();
        for row in 0..tables[0].len() {
            let p = tables[2][row][1]; // beta = 1 row equals the factual propensity
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            for k in 1..betas.len() {
                if tables[k][row][1] <= tables[k - 1][row][1] {
                    monotone = false;
                }
            }
        }
    }
    verdict(
        9,
        "incremental propensity score",
        fixpoint_gap <= 1e-12 && monotone,
        &format!("beta=1 fixpoint gap {fixpoint_gap:.3e}; strictly monotone on beta grid: {monotone}"),
    );
}

#[test]
fn criterion_10_mode_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0xAC10);
    let lamy = lamy_frame();
    let med = mediation_skeleton_frame();
    let mut max_gap = 0.0f64;
    let mut compare = |f: f64, r: BigRational| {
        max_gap = max_gap.max((f - r.to_f64()).abs());
    };
    // criterion 2 quantities on 30 models
    for _ in 0..30 {
        let rows = ratio_rows(&mut rng, 15);
        let mf: ValidatedModel<f64> = lamy_from_rows(&rows);
        let mr: ValidatedModel<BigRational> = lamy_from_rows(&rows);
        compare(gamma_nde(&mf, &lamy).unwrap(), gamma_nde(&mr, &lamy).unwrap());
        compare(gamma_nie(&mf, &lamy).unwrap(), gamma_nie(&mr, &lamy).unwrap());
        compare(gamma_ate(&mf, &lamy).unwrap(), gamma_ate(&mr, &lamy).unwrap());
    }
    // criterion 3 quantities on 10 models, criterion 4 quantities on 10
    for i in 0..10u64 {
        let seed = DEFAULT_SEED.wrapping_add(0xAC03 + i);
        let mf = sample_model::<f64>(&class_m2(1e-9), seed).unwrap();
        let mr = sample_model::<BigRational>(&class_m2(1e-9), seed).unwrap();
        compare(gamma_nde(&mf, &med).unwrap(), gamma_nde(&mr, &med).unwrap());
        compare(
            psi_rde_w(&mf.observed_law().unwrap(), &med, med.a, med.a_star).unwrap(),
            psi_rde_w(&mr.observed_law().unwrap(), &med, med.a, med.a_star).unwrap(),
        );

        let seed = DEFAULT_SEED.wrapping_add(0xAC04 + i);
        let mf = sample_model::<f64>(&class_m1(1e-9), seed).unwrap();
        let mr = sample_model::<BigRational>(&class_m1(1e-9), seed).unwrap();
        compare(gamma_rde(&mf, &med).unwrap(), gamma_rde(&mr, &med).unwrap());
        compare(
            psi_rde(&mf.observed_law().unwrap(), &med, med.a, med.a_star).unwrap(),
            psi_rde(&mr.observed_law().unwrap(), &med, med.a, med.a_star).unwrap(),
        );
    }
    verdict(
        10,
        "mode agreement",
        max_gap <= 1e-12,
        &format!("50 models; max float/rational gap {max_gap:.3e}"),
    );
}

// the B-condition hierarchy backing criterion 8's premise: fully observed
// models satisfy B1.3 (and hence B1.4) by construction
#[test]
fn longitudinal_premise_b13_holds_on_fully_observed_models() {
    let frame = w2_frame();
    let shift = w2_shift_regime::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0xAC08);
    for _ in 0..10 {
        let m = random_long_model(&mut rng);
        let report = check_b(&m, &frame, &shift, 1e-9).unwrap();
        assert!(report.b13.holds && report.b14.holds);
        // sanity: regime mean matches the g-formula directly as well
        let mean = regime_mean(&m, &frame, &shift).unwrap();
        let q = compute_q_tilde(&m, &frame, &shift).unwrap();
        let psi = extended_g_formula(&m.observed_law().unwrap(), &frame, &q).unwrap();
        assert!((mean - psi).abs() <= 1e-9);
    }
}

// sanity check tying the closed-form family oracle to the engine at one
// near-extreme grid point
#[test]
fn family_oracle_agrees_with_the_engine() {
    let fam = Family {
        pw: [0.05, 0.95, 0.95, 0.05],
        pm: [0.05, 0.95, 0.05, 0.95],
        py: [0.05, 0.95, 0.95, 0.05, 0.05, 0.95, 0.95, 0.05],
    };
    let rows16: Vec<f64> = (0..16)
        .map(|i| {
            let a = i / 8;
            let m = (i / 2) % 2;
            let u = i % 2;
            fam.y(a, m, u)
        })
        .collect();
    let model = model_from_cpts(vec![
        binary_cpt("U", &[], &[0.5]).latent(),
        binary_cpt("A", &[], &[0.5]),
        binary_cpt("W", &["A", "U"], &fam.pw),
        binary_cpt("M", &["A", "W"], &fam.pm),
        binary_cpt("Y", &["A", "W", "M", "U"], &rows16),
    ])
    .unwrap();
    let frame = mediation_skeleton_frame();
    let nde = gamma_nde(&model, &frame).unwrap();
    assert!((nde - fam.oracle_nde()).abs() < 1e-12);
    let psi = psi_rde_w(&model.observed_law().unwrap(), &frame, 1, 0).unwrap();
    assert!((psi - fam.oracle_psi_rde_w()).abs() < 1e-12);
    let rde = gamma_rde(&model, &frame).unwrap();
    let rie = causal_ident_core::mediation::gamma_rie(&model, &frame).unwrap();
    let ate = gamma_ate(&model, &frame).unwrap();
    assert!(((rde + rie - ate) - fam.oracle_rde_plus_rie_minus_ate()).abs() < 1e-12);
}
