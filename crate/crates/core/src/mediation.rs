//! Point-treatment mediation parameters, their observed-data functionals,
//! and numeric membership checks for the mediation model classes.
//!
//! Causal parameters (gamma_*) are functionals of the full law and are
//! computed by exact noise enumeration; statistical functionals (psi_*) are
//! functionals of an observed-data joint pmf only.

use crate::error::{EngineError, Result};
use crate::num::Scalar;
use crate::pmf::JointPmf;
use crate::scm::{Regime, Rule, ValidatedModel, WorldQuery};
use crate::table::Shape;

/// Role bindings for the mediation data structure L, A, W, M, Y and the
/// treatment values to contrast.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediationFrame {
    /// Baseline covariates (possibly empty).
    pub baseline: Vec<String>,
    pub treatment: String,
    /// Post-treatment covariates (possibly empty).
    pub post: Vec<String>,
    pub mediator: String,
    pub outcome: String,
    /// Treated arm label index (a).
    pub a: usize,
    /// Reference arm label index (a*).
    pub a_star: usize,
}

impl MediationFrame {
    /// Check ordering L < A < W < M < Y against the model's declared order
    /// and that the contrasted values are distinct and in range.
    pub fn validate<P: Scalar>(&self, model: &ValidatedModel<P>) -> Result<()> {
        let ia = model.index_of(&self.treatment)?;
        let im = model.index_of(&self.mediator)?;
        let iy = model.index_of(&self.outcome)?;
        for l in &self.baseline {
            if model.index_of(l)? >= ia {
                return Err(EngineError::InvalidFrame(format!(
                    "baseline `{l}` does not precede treatment"
                )));
            }
        }
        for w in &self.post {
            let iw = model.index_of(w)?;
            if iw <= ia || iw >= im {
                return Err(EngineError::InvalidFrame(format!(
                    "post-treatment `{w}` must lie between treatment and mediator"
                )));
            }
        }
        if !(ia < im && im < iy) {
            return Err(EngineError::InvalidFrame(
                "order must be treatment < mediator < outcome".into(),
            ));
        }
        let asize = model.var(ia).domain.size();
        if self.a >= asize || self.a_star >= asize {
            return Err(EngineError::InvalidFrame("treatment value out of domain".into()));
        }
        if self.a == self.a_star {
            return Err(EngineError::InvalidFrame("a and a* must differ".into()));
        }
        Ok(())
    }

    fn strs(v: &[String]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }
}

fn outcome_values<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<Vec<P>> {
    let iy = model.index_of(&frame.outcome)?;
    crate::pmf::numeric_labels(model.var(iy).domain.labels())
}

/// E[Y^a] for a static treatment value.
fn static_mean<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    a: usize,
) -> Result<P> {
    let regime = Regime::static_value(&frame.treatment, a);
    let joint = model.counterfactual_joint(&[WorldQuery::new("a", regime, &[&frame.outcome])])?;
    joint.expectation(0)
}

/// Average treatment effect E[Y^{a}] - E[Y^{a*}].
pub fn gamma_ate<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(static_mean(model, frame, frame.a)? - static_mean(model, frame, frame.a_star)?)
}

/// E[Y^{a_outer, M^{a_inner}}]: nested cross-world mean, one enumeration.
fn nested_mean<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    a_outer: usize,
    a_inner: usize,
) -> Result<P> {
    let y_values = outcome_values(model, frame)?;
    let im = model.index_of(&frame.mediator)?;
    let iy = model.index_of(&frame.outcome)?;
    let inner = Regime::static_value(&frame.treatment, a_inner);
    let mut acc = P::zero();
    model.for_each_noise(|noise, mass| {
        let m_world = model.evaluate_world(noise, &inner, None)?;
        let outer = Regime::static_value(&frame.treatment, a_outer)
            .set(&frame.mediator, Rule::Static(m_world[im]));
        let y_world = model.evaluate_world(noise, &outer, None)?;
        acc = acc.clone() + mass * y_values[y_world[iy]].clone();
        Ok(())
    })?;
    Ok(acc)
}

/// Natural direct effect E[Y^{a, M^{a*}} - Y^{a*, M^{a*}}].
pub fn gamma_nde<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(nested_mean(model, frame, frame.a, frame.a_star)?
        - nested_mean(model, frame, frame.a_star, frame.a_star)?)
}

/// Natural indirect effect E[Y^{a, M^{a}} - Y^{a, M^{a*}}].
pub fn gamma_nie<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(nested_mean(model, frame, frame.a, frame.a)?
        - nested_mean(model, frame, frame.a, frame.a_star)?)
}

/// Build the stochastic mediator rule drawing from the counterfactual
/// mediator law under `a_star`, conditional on the given covariate set
/// (baseline L, optionally the post-treatment set W observed under `a`).
///
/// The returned rule's table rows are indexed by the conditioning variables
/// in model order. Rows for conditioning values unreachable under both the
/// draw-world (a*) and the use-world (a) are filled uniformly; rows
/// reachable in use but not under the draw regime raise `ZeroMassEvent`.
fn mediator_draw_rule<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    a_use: usize,
    a_star: usize,
    condition_on_post: bool,
) -> Result<Rule<P>> {
    let mut cond: Vec<String> = frame.baseline.clone();
    if condition_on_post {
        cond.extend(frame.post.iter().cloned());
    }
    let cond_refs: Vec<&str> = cond.iter().map(|s| s.as_str()).collect();
    let mut star_vars = cond_refs.clone();
    star_vars.push(&frame.mediator);
    let star_regime = Regime::static_value(&frame.treatment, a_star);
    let star_joint = model.counterfactual_joint(&[WorldQuery::new("a*", star_regime, &star_vars)])?;
    // reachability of conditioning values in the use-world
    let use_regime = Regime::static_value(&frame.treatment, a_use);
    let use_joint = model.counterfactual_joint(&[WorldQuery::new("a", use_regime, &cond_refs)])?;

    let im = model.index_of(&frame.mediator)?;
    let msize = model.var(im).domain.size();
    let cond_shape = Shape(
        cond.iter()
            .map(|c| model.var(model.index_of(c).unwrap()).domain.size())
            .collect(),
    );
    let n_rows = cond_shape.len().max(1);
    let mut table = Vec::with_capacity(n_rows);
    let uniform: Vec<P> = (0..msize).map(|_| P::from_ratio(1, msize as i64)).collect();
    for row_idx in 0..n_rows {
        let cvals = cond_shape.unflat(row_idx);
        let event: Vec<(usize, usize)> = (0..cond.len()).map(|i| (i, cvals[i])).collect();
        let star_mass = star_joint.event_prob(&event);
        if star_mass.is_zero() {
            let use_mass = use_joint.event_prob(&event);
            if use_mass.is_positive() {
                let desc: Vec<String> = cond
                    .iter()
                    .zip(&cvals)
                    .map(|(c, &v)| {
                        let ci = model.index_of(c).unwrap();
                        format!("{c}={}", model.var(ci).domain.labels()[v])
                    })
                    .collect();
                return Err(EngineError::ZeroMassEvent(format!(
                    "mediator draw law undefined at {}",
                    desc.join(", ")
                )));
            }
            table.push(uniform.clone());
            continue;
        }
        let m_pos = cond.len();
        let row: Vec<P> = (0..msize)
            .map(|m| {
                let mut ev = event.clone();
                ev.push((m_pos, m));
                star_joint.event_prob(&ev) / star_mass.clone()
            })
            .collect();
        table.push(row);
    }
    Ok(Rule::Stochastic { args: cond, table })
}

/// E[Y^{a, G}] where G draws the mediator from its counterfactual law under
/// a_star (marginal over W, or W-conditional when `condition_on_post`).
fn stochastic_mean<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    a: usize,
    a_star: usize,
    condition_on_post: bool,
) -> Result<P> {
    let rule = mediator_draw_rule(model, frame, a, a_star, condition_on_post)?;
    let regime = Regime::static_value(&frame.treatment, a).set(&frame.mediator, rule);
    let joint = model.counterfactual_joint(&[WorldQuery::new("g", regime, &[&frame.outcome])])?;
    joint.expectation(0)
}

/// Randomized interventional analogue of the direct effect,
/// E[Y^{a, G_{a*}} - Y^{a*, G_{a*}}] (mediator drawn from its marginal
/// counterfactual law, conditional on baseline covariates when present).
pub fn gamma_rde<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(stochastic_mean(model, frame, frame.a, frame.a_star, false)?
        - stochastic_mean(model, frame, frame.a_star, frame.a_star, false)?)
}

/// Randomized interventional analogue of the indirect effect,
/// E[Y^{a, G_{a}} - Y^{a, G_{a*}}].
pub fn gamma_rie<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(stochastic_mean(model, frame, frame.a, frame.a, false)?
        - stochastic_mean(model, frame, frame.a, frame.a_star, false)?)
}

/// W-conditional analogue E[Y^{a, G_{a*|W}} - Y^{a*, G_{a*|W}}]: the
/// mediator is drawn from its counterfactual law given the realized
/// post-treatment covariates (and baseline covariates when present).
pub fn gamma_rde_w<P: Scalar>(model: &ValidatedModel<P>, frame: &MediationFrame) -> Result<P> {
    frame.validate(model)?;
    Ok(stochastic_mean(model, frame, frame.a, frame.a_star, true)?
        - stochastic_mean(model, frame, frame.a_star, frame.a_star, true)?)
}

// ---------------------------------------------------------------------------
// observed-data functionals

struct LawView {
    l: Vec<usize>,
    a: usize,
    w: Vec<usize>,
    m: usize,
    y: usize,
}

fn law_view<P: Scalar>(law: &JointPmf<P>, frame: &MediationFrame) -> Result<LawView> {
    let find = |name: &str| law.position_by_name(name);
    Ok(LawView {
        l: frame
            .baseline
            .iter()
            .map(|n| find(n))
            .collect::<Result<_>>()?,
        a: find(&frame.treatment)?,
        w: frame.post.iter().map(|n| find(n)).collect::<Result<_>>()?,
        m: find(&frame.mediator)?,
        y: find(&frame.outcome)?,
    })
}

fn strata<P: Scalar>(law: &JointPmf<P>, vars: &[usize]) -> Vec<(Vec<(usize, usize)>, P)> {
    if vars.is_empty() {
        return vec![(vec![], P::one())];
    }
    let marg = law.marginal(vars);
    let shape = marg.shape();
    shape
        .iter()
        .map(|vals| {
            (
                vars.iter().copied().zip(vals.iter().copied()).collect(),
                marg.prob(&vals),
            )
        })
        .filter(|(_, p): &(Vec<(usize, usize)>, P)| p.is_positive())
        .collect()
}

fn cond_mean_y<P: Scalar>(law: &JointPmf<P>, y: usize, given: &[(usize, usize)]) -> Result<P> {
    let q = law.query(&[y], given)?;
    q.expectation(0)
}

/// Difference in covariate-adjusted conditional outcome means:
/// sum_l { E[Y|A=a,l] - E[Y|A=a*,l] } P(l).
pub fn psi_cmn<P: Scalar>(law: &JointPmf<P>, frame: &MediationFrame) -> Result<P> {
    let v = law_view(law, frame)?;
    let mut acc = P::zero();
    for (l_event, pl) in strata(law, &v.l) {
        let mut ga = l_event.clone();
        ga.push((v.a, frame.a));
        let mut gs = l_event.clone();
        gs.push((v.a, frame.a_star));
        let diff = cond_mean_y(law, v.y, &ga)? - cond_mean_y(law, v.y, &gs)?;
        acc = acc + pl * diff;
    }
    Ok(acc)
}

/// The mediation formula:
/// sum_l P(l) sum_m { E[Y|m,a,l] - E[Y|m,a*,l] } P(m|a*,l).
pub fn psi_mediation<P: Scalar>(law: &JointPmf<P>, frame: &MediationFrame) -> Result<P> {
    let v = law_view(law, frame)?;
    let m_size = law.vars()[v.m].labels.len();
    let mut acc = P::zero();
    for (l_event, pl) in strata(law, &v.l) {
        let mut star = l_event.clone();
        star.push((v.a, frame.a_star));
        let m_law = law.query(&[v.m], &star)?;
        for m in 0..m_size {
            let pm = m_law.mass()[m].clone();
            if pm.is_zero() {
                continue;
            }
            let mut ga = l_event.clone();
            ga.push((v.m, m));
            ga.push((v.a, frame.a));
            let mut gs = l_event.clone();
            gs.push((v.m, m));
            gs.push((v.a, frame.a_star));
            let diff = cond_mean_y(law, v.y, &ga)? - cond_mean_y(law, v.y, &gs)?;
            acc = acc + pl.clone() * pm * diff;
        }
    }
    Ok(acc)
}

fn psi_rde_arm<P: Scalar>(
    law: &JointPmf<P>,
    frame: &MediationFrame,
    a: usize,
    a_star: usize,
    w_conditional: bool,
) -> Result<P> {
    let v = law_view(law, frame)?;
    let m_size = law.vars()[v.m].labels.len();
    let mut acc = P::zero();
    for (l_event, pl) in strata(law, &v.l) {
        // f(w | a, l) over the w strata
        let mut given_a = l_event.clone();
        given_a.push((v.a, a));
        let w_law = law.query(&v.w, &given_a)?;
        let w_shape = w_law.shape();
        let w_cells: Vec<Vec<usize>> = if v.w.is_empty() {
            vec![vec![]]
        } else {
            w_shape.iter().collect()
        };
        for wvals in w_cells {
            let pw = if v.w.is_empty() {
                P::one()
            } else {
                w_law.prob(&wvals)
            };
            if pw.is_zero() {
                continue;
            }
            let w_event: Vec<(usize, usize)> =
                v.w.iter().copied().zip(wvals.iter().copied()).collect();
            // mediator draw law f(m | a*, l) or f(m | w, a*, l)
            let mut star = l_event.clone();
            star.push((v.a, a_star));
            if w_conditional {
                star.extend(w_event.iter().copied());
            }
            let m_law = law.query(&[v.m], &star)?;
            for m in 0..m_size {
                let pm = m_law.mass()[m].clone();
                if pm.is_zero() {
                    continue;
                }
                let mut outcome_given = l_event.clone();
                outcome_given.push((v.a, a));
                outcome_given.extend(w_event.iter().copied());
                outcome_given.push((v.m, m));
                let ey = cond_mean_y(law, v.y, &outcome_given)?;
                acc = acc + pl.clone() * pw.clone() * pm * ey;
            }
        }
    }
    Ok(acc)
}

/// Psi_RDE: sum over (m, w) of E[Y|m,w,a,l] f(m|a*,l) f(w|a,l), averaged
/// over baseline covariates, contrasting the two arms.
pub fn psi_rde<P: Scalar>(
    law: &JointPmf<P>,
    frame: &MediationFrame,
    a: usize,
    a_star: usize,
) -> Result<P> {
    Ok(psi_rde_arm(law, frame, a, a_star, false)?
        - psi_rde_arm(law, frame, a_star, a_star, false)?)
}

/// Psi_RDE-W: as Psi_RDE but with the mediator drawn from f(m|w,a*,l).
pub fn psi_rde_w<P: Scalar>(
    law: &JointPmf<P>,
    frame: &MediationFrame,
    a: usize,
    a_star: usize,
) -> Result<P> {
    Ok(psi_rde_arm(law, frame, a, a_star, true)?
        - psi_rde_arm(law, frame, a_star, a_star, true)?)
}

// ---------------------------------------------------------------------------
// model-class membership

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub name: String,
    pub holds: bool,
    pub max_deviation: f64,
    pub skipped_strata: usize,
}

/// Outcome of a membership check, one verdict per defining assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub class: String,
    pub conditions: Vec<ConditionVerdict>,
    pub holds: bool,
}

impl MembershipReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionVerdict> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Cross-world joint holding Y^{a,m}, the mediator under `m_regime_arm`,
/// and the factual (A, W, L).
fn cross_world_joint<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    a: usize,
    m: usize,
    mediator_arm: usize,
) -> Result<JointPmf<P>> {
    let ym_regime = Regime::static_value(&frame.treatment, a).set(&frame.mediator, Rule::Static(m));
    let med_regime = Regime::static_value(&frame.treatment, mediator_arm);
    let mut factual_vars: Vec<&str> = vec![&frame.treatment];
    factual_vars.extend(frame.post.iter().map(|s| s.as_str()));
    factual_vars.extend(frame.baseline.iter().map(|s| s.as_str()));
    model.counterfactual_joint(&[
        WorldQuery::new("ym", ym_regime, &[&frame.outcome]),
        WorldQuery::new("med", med_regime, &[&frame.mediator]),
        WorldQuery {
            label: None,
            regime: Regime::empty(),
            vars: factual_vars.iter().map(|s| s.to_string()).collect(),
        },
    ])
}

struct CrossWorldPositions {
    y_am: usize,
    m_arm: usize,
    a: usize,
    w: Vec<usize>,
    l: Vec<usize>,
}

fn cross_world_positions<P: Scalar>(
    joint: &JointPmf<P>,
    frame: &MediationFrame,
) -> CrossWorldPositions {
    CrossWorldPositions {
        y_am: joint.position(&frame.outcome, Some("ym")).unwrap(),
        m_arm: joint.position(&frame.mediator, Some("med")).unwrap(),
        a: joint.position(&frame.treatment, None).unwrap(),
        w: frame
            .post
            .iter()
            .map(|w| joint.position(w, None).unwrap())
            .collect(),
        l: frame
            .baseline
            .iter()
            .map(|l| joint.position(l, None).unwrap())
            .collect(),
    }
}

fn merge_verdict(agg: &mut ConditionVerdict, dev: f64, skipped: usize, tol: f64) {
    if dev > agg.max_deviation {
        agg.max_deviation = dev;
    }
    agg.skipped_strata += skipped;
    agg.holds = agg.holds && dev <= tol;
}

/// A1.3-style positivity: treated arms reachable in every baseline stratum,
/// and every mediator value reachable in every positive (w, a, l) stratum.
fn positivity_verdict<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
) -> Result<ConditionVerdict> {
    let law = model.observed_law()?;
    let v = law_view(&law, frame)?;
    let a_size = law.vars()[v.a].labels.len();
    let m_size = law.vars()[v.m].labels.len();
    let mut holds = true;
    for (l_event, _) in strata(&law, &v.l) {
        for a in 0..a_size {
            let mut ev = l_event.clone();
            ev.push((v.a, a));
            if !law.event_prob(&ev).is_positive() {
                holds = false;
            }
        }
    }
    // P(w, a, l) > 0 implies P(m | w, a, l) > 0 for all m
    let mut wal = v.w.clone();
    wal.push(v.a);
    wal.extend(v.l.iter().copied());
    for (event, _) in strata(&law, &wal) {
        for m in 0..m_size {
            let mut ev = event.clone();
            ev.push((v.m, m));
            if !law.event_prob(&ev).is_positive() {
                holds = false;
            }
        }
    }
    Ok(ConditionVerdict {
        name: "A1.3".into(),
        holds,
        max_deviation: if holds { 0.0 } else { 1.0 },
        skipped_strata: 0,
    })
}

/// Verdicts for A1.1, A1.2 and A1.3 at tolerance `tol`.
pub fn check_m1<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    tol: f64,
) -> Result<MembershipReport> {
    frame.validate(model)?;
    let ia = model.index_of(&frame.treatment)?;
    let im = model.index_of(&frame.mediator)?;
    let a_size = model.var(ia).domain.size();
    let m_size = model.var(im).domain.size();

    let mut a11 = ConditionVerdict {
        name: "A1.1".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    let mut a12 = ConditionVerdict {
        name: "A1.2".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    for a in 0..a_size {
        for m in 0..m_size {
            let joint = cross_world_joint(model, frame, a, m, a)?;
            let pos = cross_world_positions(&joint, frame);
            // A1.1: (Y^{a,m}, M^a) independent of A given baseline covariates
            let (dev, skipped) = joint.conditional_independence_deviation(
                &[pos.y_am, pos.m_arm],
                &[pos.a],
                &pos.l,
            )?;
            merge_verdict(&mut a11, dev.to_f64(), skipped, tol);
            // A1.2: Y^{a,m} independent of M^a given W, L on the stratum A=a
            match joint.condition(&[(pos.a, a)]) {
                Ok(on_a) => {
                    let y_am = on_a.position(&frame.outcome, Some("ym")).unwrap();
                    let m_arm = on_a.position(&frame.mediator, Some("med")).unwrap();
                    let mut z: Vec<usize> = frame
                        .post
                        .iter()
                        .map(|w| on_a.position(w, None).unwrap())
                        .collect();
                    z.extend(
                        frame
                            .baseline
                            .iter()
                            .map(|l| on_a.position(l, None).unwrap()),
                    );
                    let (dev, skipped) =
                        on_a.conditional_independence_deviation(&[y_am], &[m_arm], &z)?;
                    merge_verdict(&mut a12, dev.to_f64(), skipped, tol);
                }
                Err(EngineError::ZeroMassEvent(_)) => a12.skipped_strata += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let a13 = positivity_verdict(model, frame)?;
    let holds = a11.holds && a12.holds && a13.holds;
    Ok(MembershipReport {
        class: "M1".into(),
        conditions: vec![a11, a12, a13],
        holds,
    })
}

/// M1 verdicts plus the cross-world assumptions A2.1 and A2.2.
pub fn check_m2<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
    tol: f64,
) -> Result<MembershipReport> {
    let m1 = check_m1(model, frame, tol)?;
    let ia = model.index_of(&frame.treatment)?;
    let im = model.index_of(&frame.mediator)?;
    let a_size = model.var(ia).domain.size();
    let m_size = model.var(im).domain.size();

    let mut a21 = ConditionVerdict {
        name: "A2.1".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    let mut a22 = ConditionVerdict {
        name: "A2.2".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    for a in 0..a_size {
        for a_star in 0..a_size {
            for m in 0..m_size {
                let joint = cross_world_joint(model, frame, a, m, a_star)?;
                let pos = cross_world_positions(&joint, frame);
                let mut wl = pos.w.clone();
                wl.extend(pos.l.iter().copied());
                // A2.1: (Y^{a,m}, M^{a*}) independent of A given W, L
                let (dev, skipped) = joint.conditional_independence_deviation(
                    &[pos.y_am, pos.m_arm],
                    &[pos.a],
                    &wl,
                )?;
                merge_verdict(&mut a21, dev.to_f64(), skipped, tol);
                // A2.2: Y^{a,m} independent of M^{a*} given W, L, A
                let mut wla = wl.clone();
                wla.push(pos.a);
                let (dev, skipped) =
                    joint.conditional_independence_deviation(&[pos.y_am], &[pos.m_arm], &wla)?;
                merge_verdict(&mut a22, dev.to_f64(), skipped, tol);
            }
        }
    }
    let holds = m1.holds && a21.holds && a22.holds;
    let mut conditions = m1.conditions;
    conditions.push(a21);
    conditions.push(a22);
    Ok(MembershipReport {
        class: "M2".into(),
        conditions,
        holds,
    })
}

/// Mean outcome under the mediator-randomizing regime pair
/// (E[Y^{a, G_a}], E[Y^{a*, G_{a*}}]) difference; exposed for the
/// non-decomposition witness check.
pub fn interventional_total<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &MediationFrame,
) -> Result<P> {
    frame.validate(model)?;
    Ok(stochastic_mean(model, frame, frame.a, frame.a, false)?
        - stochastic_mean(model, frame, frame.a_star, frame.a_star, false)?)
}

/// Convenience: list the observed frame variables in model order.
pub fn frame_observables(frame: &MediationFrame) -> Vec<&str> {
    let mut v: Vec<&str> = MediationFrame::strs(&frame.baseline);
    v.push(&frame.treatment);
    v.extend(MediationFrame::strs(&frame.post));
    v.push(&frame.mediator);
    v.push(&frame.outcome);
    v
}
