//! Time-varying regimes: modified treatment plans (regimes reading the
//! natural value of treatment), stochastic draw regimes, incremental
//! propensity-score interventions, the extended g-formula with recursive
//! intervention densities, sequential-exchangeability checks (B1.2-B1.4)
//! and Z/S ancestor sets on the intervened graph.

use std::collections::BTreeSet;

use crate::error::{EngineError, Result};
use crate::mediation::ConditionVerdict;
use crate::num::Scalar;
use crate::pmf::{numeric_labels, JointPmf};
use crate::scm::{Regime, Rule, ValidatedModel, WorldQuery};
use crate::table::Shape;

/// Role bindings for the longitudinal ordering
/// (L_0, A_0, ..., L_K, A_K, Y): per-interval covariate blocks, one
/// treatment per interval, and a terminal outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongitudinalFrame {
    /// Covariate block per interval (possibly empty).
    pub covariates: Vec<Vec<String>>,
    /// One treatment per interval.
    pub treatments: Vec<String>,
    pub outcome: String,
}

impl LongitudinalFrame {
    /// Number of intervals (K + 1 treatment times).
    pub fn intervals(&self) -> usize {
        self.treatments.len()
    }

    /// Check the declared ordering and shared treatment domains.
    pub fn validate<P: Scalar>(&self, model: &ValidatedModel<P>) -> Result<()> {
        if self.treatments.is_empty() || self.covariates.len() != self.treatments.len() {
            return Err(EngineError::InvalidFrame(
                "need one covariate block per treatment interval".into(),
            ));
        }
        let mut prev = None::<usize>;
        for t in 0..self.intervals() {
            for l in &self.covariates[t] {
                let i = model.index_of(l)?;
                if prev.is_some_and(|p| i <= p) {
                    return Err(EngineError::InvalidFrame(format!(
                        "covariate `{l}` out of order"
                    )));
                }
                prev = Some(i);
            }
            let ia = model.index_of(&self.treatments[t])?;
            if prev.is_some_and(|p| ia <= p) {
                return Err(EngineError::InvalidFrame(format!(
                    "treatment `{}` out of order",
                    self.treatments[t]
                )));
            }
            prev = Some(ia);
        }
        let iy = model.index_of(&self.outcome)?;
        if prev.is_some_and(|p| iy <= p) {
            return Err(EngineError::InvalidFrame("outcome must come last".into()));
        }
        let first = model.var(model.index_of(&self.treatments[0])?).domain.labels();
        for a in &self.treatments[1..] {
            if model.var(model.index_of(a)?).domain.labels() != first {
                return Err(EngineError::InvalidFrame(
                    "all treatments must share one domain".into(),
                ));
            }
        }
        Ok(())
    }

    /// Measured history before A_t: (L_0, A_0, ..., A_{t-1}, L_t), in order.
    pub fn history_vars(&self, t: usize) -> Vec<String> {
        let mut out = Vec::new();
        for j in 0..=t {
            out.extend(self.covariates[j].iter().cloned());
            if j < t {
                out.push(self.treatments[j].clone());
            }
        }
        out
    }

    /// All measured variables in order, outcome last.
    pub fn measured_vars(&self) -> Vec<String> {
        let mut out = self.history_vars(self.intervals() - 1);
        out.push(self.treatments[self.intervals() - 1].clone());
        out.push(self.outcome.clone());
        out
    }

    /// Covariate variables of intervals up to and including `t`.
    fn covariates_through(&self, t: usize) -> Vec<String> {
        self.covariates[..=t].iter().flatten().cloned().collect()
    }
}

fn history_shape<P: Scalar>(
    model: &ValidatedModel<P>,
    vars: &[String],
) -> Result<Shape> {
    let sizes = vars
        .iter()
        .map(|v| Ok(model.var(model.index_of(v)?).domain.size()))
        .collect::<Result<Vec<usize>>>()?;
    Ok(Shape(sizes))
}

/// Intervention densities q̃_t(a_t^+ | measured history) as explicit tables.
/// A `None` row marks a history unreachable under the partial static regime,
/// where the recursion leaves the density undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<P: Scalar> {
    pub history: Vec<String>,
    pub rows: Vec<Option<Vec<P>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeDensitySet<P: Scalar> {
    pub tables: Vec<QTable<P>>,
}

fn args_in_history(args: &[String], history: &[String], who: &str) -> Result<Vec<usize>> {
    args.iter()
        .map(|a| {
            history.iter().position(|h| h == a).ok_or_else(|| {
                EngineError::InvalidRegime(format!(
                    "rule on `{who}` reads `{a}`, which is not part of the measured history"
                ))
            })
        })
        .collect()
}

fn arg_index<P: Scalar>(
    model: &ValidatedModel<P>,
    history: &[String],
    arg_pos: &[usize],
    hist_vals: &[usize],
    lead: Option<(usize, usize)>,
) -> Result<usize> {
    let mut shape = Vec::new();
    let mut idx = Vec::new();
    if let Some((size, val)) = lead {
        shape.push(size);
        idx.push(val);
    }
    for &p in arg_pos {
        shape.push(model.var(model.index_of(&history[p])?).domain.size());
        idx.push(hist_vals[p]);
    }
    Ok(Shape(shape).flat(&idx))
}

/// Conditional law of the (natural) treatment A_t given the measured
/// history, with earlier treatments governed by `prefix` rules; `None` rows
/// mark zero-mass histories.
fn treatment_law<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    t: usize,
    prefix: &Regime<P>,
) -> Result<Vec<Option<Vec<P>>>> {
    let history = frame.history_vars(t);
    let shape = history_shape(model, &history)?;
    let mut vars: Vec<&str> = history.iter().map(|s| s.as_str()).collect();
    vars.push(&frame.treatments[t]);
    let joint = model.counterfactual_joint(&[WorldQuery::new("w", prefix.clone(), &vars)])?;
    let a_size = model
        .var(model.index_of(&frame.treatments[t])?)
        .domain
        .size();
    let mut rows = Vec::with_capacity(shape.len().max(1));
    for hist_vals in shape_rows(&shape) {
        let event: Vec<(usize, usize)> = hist_vals.iter().copied().enumerate().collect();
        let h_mass = joint.event_prob(&event);
        if h_mass.is_zero() {
            rows.push(None);
            continue;
        }
        let row: Vec<P> = (0..a_size)
            .map(|a| {
                let mut ev = event.clone();
                ev.push((history.len(), a));
                joint.event_prob(&ev) / h_mass.clone()
            })
            .collect();
        rows.push(Some(row));
    }
    Ok(rows)
}

fn shape_rows(shape: &Shape) -> Vec<Vec<usize>> {
    if shape.0.is_empty() {
        vec![vec![]]
    } else {
        shape.iter().collect()
    }
}

/// Static regime fixing the treatments of intervals `0..t` at given values.
fn static_prefix<P: Scalar>(frame: &LongitudinalFrame, vals: &[usize]) -> Regime<P> {
    let mut r = Regime::empty();
    for (j, &v) in vals.iter().enumerate() {
        r = r.set(&frame.treatments[j], Rule::Static(v));
    }
    r
}

/// Intervention densities of a regime, one table per interval.
///
/// Deterministic rules yield indicator rows; stochastic rules are copied
/// verbatim onto the history shape; natural-value rules mix the rule over
/// the treatment's conditional law computed under the static regime that
/// pins the earlier treatments at the history's assigned values.
pub fn compute_q_tilde<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    regime: &Regime<P>,
) -> Result<RegimeDensitySet<P>> {
    frame.validate(model)?;
    model.validate_regime(regime)?;
    let mut tables = Vec::with_capacity(frame.intervals());
    for t in 0..frame.intervals() {
        let a_name = &frame.treatments[t];
        let a_size = model.var(model.index_of(a_name)?).domain.size();
        let history = frame.history_vars(t);
        let shape = history_shape(model, &history)?;
        let hist_rows = shape_rows(&shape);
        let indicator = |v: usize| {
            let mut row = vec![P::zero(); a_size];
            row[v] = P::one();
            row
        };
        let rows: Vec<Option<Vec<P>>> = match regime.rules.get(a_name) {
            Some(Rule::Static(v)) => hist_rows.iter().map(|_| Some(indicator(*v))).collect(),
            Some(Rule::Dynamic { args, table }) => {
                let pos = args_in_history(args, &history, a_name)?;
                hist_rows
                    .iter()
                    .map(|h| {
                        let i = arg_index(model, &history, &pos, h, None)?;
                        Ok(Some(indicator(table[i])))
                    })
                    .collect::<Result<_>>()?
            }
            Some(Rule::Stochastic { args, table }) => {
                let pos = args_in_history(args, &history, a_name)?;
                hist_rows
                    .iter()
                    .map(|h| {
                        let mut shape = Vec::new();
                        let mut idx = Vec::new();
                        for &p in &pos {
                            shape.push(model.var(model.index_of(&history[p])?).domain.size());
                            idx.push(h[p]);
                        }
                        Ok(Some(table[Shape(shape).flat(&idx)].clone()))
                    })
                    .collect::<Result<_>>()?
            }
            rule @ (Some(Rule::NaturalValueDynamic { .. }) | None) => {
                // natural-value mixing over the partial static regime
                let (arg_pos, table) = match rule {
                    Some(Rule::NaturalValueDynamic { args, table }) => {
                        (args_in_history(args, &history, a_name)?, Some(table))
                    }
                    _ => (Vec::new(), None),
                };
                // assigned-prefix values live at fixed history positions
                let a_pos: Vec<usize> = (0..t)
                    .map(|j| {
                        history
                            .iter()
                            .position(|h| h == &frame.treatments[j])
                            .unwrap()
                    })
                    .collect();
                let mut rows = vec![None; hist_rows.len().max(1)];
                let prefix_shape = Shape(vec![a_size; t]);
                for prefix_vals in shape_rows(&prefix_shape) {
                    let prefix = static_prefix(frame, &prefix_vals);
                    let law = treatment_law(model, frame, t, &prefix)?;
                    for (ri, h) in hist_rows.iter().enumerate() {
                        if (0..t).any(|j| h[a_pos[j]] != prefix_vals[j]) {
                            continue;
                        }
                        let Some(natural) = &law[shape.flat(h)] else {
                            continue;
                        };
                        let mut row = vec![P::zero(); a_size];
                        for (a_nat, p) in natural.iter().enumerate() {
                            if p.is_zero() {
                                continue;
                            }
                            let assigned = match table {
                                Some(tbl) => {
                                    let i = arg_index(
                                        model,
                                        &history,
                                        &arg_pos,
                                        h,
                                        Some((a_size, a_nat)),
                                    )?;
                                    tbl[i]
                                }
                                None => a_nat,
                            };
                            row[assigned] = row[assigned].clone() + p.clone();
                        }
                        rows[ri] = Some(row);
                    }
                }
                rows
            }
        };
        tables.push(QTable {
            history,
            rows,
        });
    }
    Ok(RegimeDensitySet { tables })
}

fn history_desc<P: Scalar>(law: &JointPmf<P>, event: &[(usize, usize)]) -> String {
    event
        .iter()
        .map(|&(i, v)| format!("{}={}", law.vars()[i].name, law.vars()[i].labels[v]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The extended g-formula applied to an observed law: the history sum form,
/// cross-checked against the importance-weighted form E[Y prod q̃_t / p_t].
pub fn extended_g_formula<P: Scalar>(
    law: &JointPmf<P>,
    frame: &LongitudinalFrame,
    q: &RegimeDensitySet<P>,
) -> Result<P> {
    let k = frame.intervals();
    if q.tables.len() != k {
        return Err(EngineError::InvalidRegime(
            "density set has the wrong number of intervals".into(),
        ));
    }
    let pos = |name: &str| law.position_by_name(name);
    let y_pos = pos(&frame.outcome)?;
    let a_pos: Vec<usize> = frame
        .treatments
        .iter()
        .map(|a| pos(a))
        .collect::<Result<_>>()?;
    let l_pos: Vec<Vec<usize>> = frame
        .covariates
        .iter()
        .map(|block| block.iter().map(|l| pos(l)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let y_values = numeric_labels::<P>(&law.vars()[y_pos].labels)?;

    // --- sum form: depth-first over (l-block, a) assignments
    struct Walk<'a, P: Scalar> {
        law: &'a JointPmf<P>,
        frame: &'a LongitudinalFrame,
        q: &'a RegimeDensitySet<P>,
        y_pos: usize,
        a_pos: &'a [usize],
        l_pos: &'a [Vec<usize>],
        y_values: &'a [P],
        total: P,
    }

    impl<'a, P: Scalar> Walk<'a, P> {
        /// Probability of `block` given the event so far; positivity errors
        /// name the interval whose assigned treatment broke the support.
        fn block_prob(
            &self,
            event: &[(usize, usize)],
            block: &[(usize, usize)],
            interval: usize,
        ) -> Result<P> {
            let denom = self.law.event_prob(event);
            if denom.is_zero() {
                return Err(EngineError::PositivityViolation {
                    interval,
                    history: history_desc(self.law, event),
                });
            }
            let mut ev = event.to_vec();
            ev.extend_from_slice(block);
            Ok(self.law.event_prob(&ev) / denom)
        }

        fn go(
            &mut self,
            t: usize,
            event: Vec<(usize, usize)>,
            hist_vals: Vec<usize>,
            weight: P,
        ) -> Result<()> {
            if weight.is_zero() {
                return Ok(());
            }
            if t == self.frame.intervals() {
                let denom = self.law.event_prob(&event);
                if denom.is_zero() {
                    return Err(EngineError::PositivityViolation {
                        interval: t - 1,
                        history: history_desc(self.law, &event),
                    });
                }
                let mut acc = P::zero();
                for (y, val) in self.y_values.iter().enumerate() {
                    let mut ev = event.clone();
                    ev.push((self.y_pos, y));
                    acc = acc + self.law.event_prob(&ev) * val.clone();
                }
                self.total = self.total.clone() + weight * (acc / denom);
                return Ok(());
            }
            // enumerate this interval's covariate block
            let block_pos = &self.l_pos[t];
            let block_shape = Shape(
                block_pos
                    .iter()
                    .map(|&i| self.law.vars()[i].labels.len())
                    .collect(),
            );
            for block_vals in shape_rows(&block_shape) {
                let block: Vec<(usize, usize)> = block_pos
                    .iter()
                    .copied()
                    .zip(block_vals.iter().copied())
                    .collect();
                let pl = if block.is_empty() {
                    P::one()
                } else {
                    self.block_prob(&event, &block, t.saturating_sub(1))?
                };
                if pl.is_zero() {
                    continue;
                }
                let mut ev = event.clone();
                ev.extend_from_slice(&block);
                let mut hist = hist_vals.clone();
                hist.extend_from_slice(&block_vals);
                // assigned treatment draw
                let table = &self.q.tables[t];
                let hshape = Shape(
                    table
                        .history
                        .iter()
                        .map(|h| {
                            self.law.vars()[self.law.position_by_name(h).unwrap()]
                                .labels
                                .len()
                        })
                        .collect(),
                );
                let row = table.rows[hshape.flat(&hist)].as_ref().ok_or_else(|| {
                    EngineError::PositivityViolation {
                        interval: t,
                        history: history_desc(self.law, &ev),
                    }
                })?;
                for (a, qa) in row.iter().enumerate() {
                    if qa.is_zero() {
                        continue;
                    }
                    let mut ev2 = ev.clone();
                    ev2.push((self.a_pos[t], a));
                    let mut hist2 = hist.clone();
                    hist2.push(a);
                    self.go(
                        t + 1,
                        ev2,
                        hist2,
                        weight.clone() * pl.clone() * qa.clone(),
                    )?;
                }
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        law,
        frame,
        q,
        y_pos,
        a_pos: &a_pos,
        l_pos: &l_pos,
        y_values: &y_values,
        total: P::zero(),
    };
    walk.go(0, Vec::new(), Vec::new(), P::one())?;
    let sum_form = walk.total;

    // --- importance-weighted form over the factual support
    let shape = law.shape();
    let mut ipw = P::zero();
    for (flat, mass) in law.mass().iter().enumerate() {
        if mass.is_zero() {
            continue;
        }
        let idx = shape.unflat(flat);
        let mut weight = mass.clone() * y_values[idx[y_pos]].clone();
        for t in 0..k {
            let table = &q.tables[t];
            let hist_pos: Vec<usize> = table
                .history
                .iter()
                .map(|h| law.position_by_name(h))
                .collect::<Result<_>>()?;
            let hist_vals: Vec<usize> = hist_pos.iter().map(|&i| idx[i]).collect();
            let hshape = Shape(
                hist_pos
                    .iter()
                    .map(|&i| law.vars()[i].labels.len())
                    .collect(),
            );
            let row = table.rows[hshape.flat(&hist_vals)]
                .as_ref()
                .ok_or_else(|| EngineError::ZeroMassEvent("q̃ undefined on the factual support".into()))?;
            let hist_event: Vec<(usize, usize)> = hist_pos
                .iter()
                .copied()
                .zip(hist_vals.iter().copied())
                .collect();
            let mut full = hist_event.clone();
            full.push((a_pos[t], idx[a_pos[t]]));
            let p_t = law.event_prob(&full) / law.event_prob(&hist_event);
            weight = weight * row[idx[a_pos[t]]].clone() / p_t;
        }
        ipw = ipw + weight;
    }

    let gap = (sum_form.clone() - ipw).abs().to_f64();
    debug_assert!(gap <= 1e-10, "g-formula forms disagree by {gap}");
    if gap > 1e-10 {
        return Err(EngineError::Spec {
            pointer: "/g-formula".into(),
            message: format!("sum and weighted forms disagree by {gap}"),
        });
    }
    Ok(sum_form)
}

/// Counterfactual mean outcome under a regime, by exact enumeration.
pub fn regime_mean<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    regime: &Regime<P>,
) -> Result<P> {
    frame.validate(model)?;
    let joint = model.counterfactual_joint(&[WorldQuery::new("g", regime.clone(), &[&frame.outcome])])?;
    joint.expectation(0)
}

/// Incremental propensity-score regime: at each interval the odds of
/// treatment are multiplied by beta, q̃(1|h) = beta p / (beta p + 1 - p)
/// with p the factual propensity. Requires binary treatments. Rows at
/// zero-mass histories are uniform (unreachable under the regime).
pub fn incremental_ps_regime<P: Scalar>(
    law: &JointPmf<P>,
    frame: &LongitudinalFrame,
    beta: P,
) -> Result<Regime<P>> {
    if !beta.is_positive() {
        return Err(EngineError::InvalidRegime("beta must be positive".into()));
    }
    let mut regime = Regime::empty();
    for t in 0..frame.intervals() {
        let a_pos = law.position_by_name(&frame.treatments[t])?;
        if law.vars()[a_pos].labels.len() != 2 {
            return Err(EngineError::InvalidRegime(
                "incremental propensity scores need binary treatments".into(),
            ));
        }
        let history = frame.history_vars(t);
        let hist_pos: Vec<usize> = history
            .iter()
            .map(|h| law.position_by_name(h))
            .collect::<Result<_>>()?;
        let hshape = Shape(
            hist_pos
                .iter()
                .map(|&i| law.vars()[i].labels.len())
                .collect(),
        );
        let mut table = Vec::with_capacity(hshape.len().max(1));
        for hist_vals in shape_rows(&hshape) {
            let event: Vec<(usize, usize)> = hist_pos
                .iter()
                .copied()
                .zip(hist_vals.iter().copied())
                .collect();
            let denom = law.event_prob(&event);
            if denom.is_zero() {
                table.push(vec![P::from_ratio(1, 2), P::from_ratio(1, 2)]);
                continue;
            }
            let mut ev = event.clone();
            ev.push((a_pos, 1));
            let p = law.event_prob(&ev) / denom;
            let q1 = beta.clone() * p.clone()
                / (beta.clone() * p.clone() + P::one() - p.clone());
            table.push(vec![P::one() - q1.clone(), q1]);
        }
        regime = regime.set(
            &frame.treatments[t],
            Rule::Stochastic {
                args: history,
                table,
            },
        );
    }
    Ok(regime)
}

// ---------------------------------------------------------------------------
// Z/S sets on the intervened graph

/// Ancestor sets in the intervened graph, where each treatment is split
/// into a natural node and an assigned node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZSets {
    /// Non-assigned ancestors of the outcome.
    pub z: Vec<String>,
    /// Measured natural nodes outside `z`.
    pub s: Vec<String>,
    /// `z` with the first k intervals' measured nodes removed, per k.
    pub z_k: Vec<Vec<String>>,
    pub s_k: Vec<Vec<String>>,
}

/// Compute the Z/S ancestor sets for a regime's dependence structure.
pub fn z_sets<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    regime: &Regime<P>,
) -> Result<ZSets> {
    frame.validate(model)?;
    model.validate_regime(regime)?;
    let n = model.n_vars();
    let treatment_idx: Vec<usize> = frame
        .treatments
        .iter()
        .map(|a| model.index_of(a))
        .collect::<Result<_>>()?;
    // nodes 0..n are natural nodes; n..n+T are assigned treatment nodes
    let assigned_node = |t: usize| n + t;
    let mut parents: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n + treatment_idx.len()];
    for i in 0..n {
        for &p in model.parent_indices(i) {
            if let Some(t) = treatment_idx.iter().position(|&a| a == p) {
                // structural children read the assigned value
                parents[i].insert(assigned_node(t));
            } else {
                parents[i].insert(p);
            }
        }
    }
    for (t, &ai) in treatment_idx.iter().enumerate() {
        let node = assigned_node(t);
        match regime.rules.get(&frame.treatments[t]) {
            None => {
                parents[node].insert(ai);
            }
            Some(Rule::Static(_)) => {}
            Some(Rule::Dynamic { args, .. }) | Some(Rule::Stochastic { args, .. }) => {
                for a in args {
                    let j = model.index_of(a)?;
                    match treatment_idx.iter().position(|&x| x == j) {
                        Some(tj) => {
                            parents[node].insert(assigned_node(tj));
                        }
                        None => {
                            parents[node].insert(j);
                        }
                    }
                }
            }
            Some(Rule::NaturalValueDynamic { args, .. }) => {
                parents[node].insert(ai);
                for a in args {
                    let j = model.index_of(a)?;
                    match treatment_idx.iter().position(|&x| x == j) {
                        Some(tj) => {
                            parents[node].insert(assigned_node(tj));
                        }
                        None => {
                            parents[node].insert(j);
                        }
                    }
                }
            }
        }
    }
    // ancestor closure of the outcome
    let iy = model.index_of(&frame.outcome)?;
    let mut anc = BTreeSet::new();
    let mut stack = vec![iy];
    while let Some(v) = stack.pop() {
        if anc.insert(v) {
            stack.extend(parents[v].iter().copied());
        }
    }
    let name_of = |i: usize| model.var(i).name.clone();
    let z: Vec<String> = (0..n).filter(|&i| anc.contains(&i)).map(name_of).collect();
    // measured natural nodes: covariates, treatments, outcome
    let measured: Vec<String> = frame.measured_vars();
    let s: Vec<String> = measured
        .iter()
        .filter(|m| !z.contains(m))
        .cloned()
        .collect();
    let mut z_k = Vec::new();
    let mut s_k = Vec::new();
    for t in 0..frame.intervals() {
        let mut early: Vec<String> = frame.covariates_through(t);
        early.extend(frame.treatments[..=t].iter().cloned());
        z_k.push(z.iter().filter(|v| !early.contains(v)).cloned().collect());
        s_k.push(s.iter().filter(|v| !early.contains(v)).cloned().collect());
    }
    Ok(ZSets { z, s, z_k, s_k })
}

// ---------------------------------------------------------------------------
// B conditions

/// Verdicts for the sequential conditions: B1.2 positivity under the given
/// regime, and the exchangeability conditions B1.3/B1.4 over every static
/// assignment, plus the Z/S listings.
#[derive(Debug, Clone, PartialEq)]
pub struct BReport {
    pub b12: ConditionVerdict,
    pub b12_violations: Vec<String>,
    pub b13: ConditionVerdict,
    pub b14: ConditionVerdict,
    pub zsets: ZSets,
}

impl BReport {
    pub fn holds(&self) -> bool {
        self.b12.holds && self.b13.holds && self.b14.holds
    }
}

/// Check B1.2 (for the given regime) and B1.3/B1.4 at tolerance `tol`.
pub fn check_b<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    regime: &Regime<P>,
    tol: f64,
) -> Result<BReport> {
    frame.validate(model)?;
    let k = frame.intervals();
    let law = model.observed_law()?;
    let q = compute_q_tilde(model, frame, regime)?;

    // B1.2: regime-reachable treatment histories must be on factual support
    let mut violations = Vec::new();
    for t in 0..k {
        let history = frame.history_vars(t);
        let mut vars: Vec<&str> = history.iter().map(|s| s.as_str()).collect();
        vars.push(&frame.treatments[t]);
        let reach = model.counterfactual_joint(&[WorldQuery::new("g", regime.clone(), &vars)])?;
        let shape = reach.shape();
        for (flat, mass) in reach.mass().iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let idx = shape.unflat(flat);
            let event: Vec<(usize, usize)> = idx.iter().copied().enumerate().collect();
            let fact_pos: Vec<usize> = vars
                .iter()
                .map(|v| law.position_by_name(v))
                .collect::<Result<_>>()?;
            let fact_event: Vec<(usize, usize)> = fact_pos
                .iter()
                .copied()
                .zip(idx.iter().copied())
                .collect();
            if !law.event_prob(&fact_event).is_positive() {
                violations.push(format!("interval {t}: {}", history_desc(&reach, &event)));
            }
        }
        // undefined q̃ rows at regime-reachable histories also break B1.2
        let hshape = history_shape(model, &history)?;
        for (ri, row) in q.tables[t].rows.iter().enumerate() {
            if row.is_some() {
                continue;
            }
            let hist_vals = hshape.unflat(ri);
            let event: Vec<(usize, usize)> = hist_vals.iter().copied().enumerate().collect();
            if reach.event_prob(&event).is_positive() {
                violations.push(format!(
                    "interval {t}: undefined density at {}",
                    history_desc(&reach, &event)
                ));
            }
        }
    }
    let b12 = ConditionVerdict {
        name: "B1.2".into(),
        holds: violations.is_empty(),
        max_deviation: if violations.is_empty() { 0.0 } else { 1.0 },
        skipped_strata: 0,
    };

    // B1.3 / B1.4 over every static assignment
    let a_size = model
        .var(model.index_of(&frame.treatments[0])?)
        .domain
        .size();
    let mut b13 = ConditionVerdict {
        name: "B1.3".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    let mut b14 = ConditionVerdict {
        name: "B1.4".into(),
        holds: true,
        max_deviation: 0.0,
        skipped_strata: 0,
    };
    let assign_shape = Shape(vec![a_size; k]);
    for assigned in shape_rows(&assign_shape) {
        // one joint per static assignment: natural treatment values at every
        // interval plus all covariates and the outcome under the full regime
        let mut worlds = Vec::with_capacity(k + 1);
        for m in 0..k {
            let prefix = static_prefix(frame, &assigned[..m]);
            worlds.push(WorldQuery::new(
                &format!("nat{m}"),
                prefix,
                &[&frame.treatments[m]],
            ));
        }
        let full = static_prefix(frame, &assigned);
        let mut full_vars: Vec<&str> = Vec::new();
        for block in &frame.covariates {
            full_vars.extend(block.iter().map(|s| s.as_str()));
        }
        full_vars.push(&frame.outcome);
        worlds.push(WorldQuery::new("full", full, &full_vars));
        let joint = model.counterfactual_joint(&worlds)?;
        for m in 0..k {
            let nat_m = joint
                .position(&frame.treatments[m], Some(&format!("nat{m}")))
                .unwrap();
            let ext = joint.with_indicator(nat_m, assigned[m], "__ind");
            let ind = ext.position("__ind", None).unwrap();
            let mut future_l: Vec<usize> = frame.covariates[m + 1..]
                .iter()
                .flatten()
                .map(|l| ext.position(l, Some("full")).unwrap())
                .collect();
            future_l.push(ext.position(&frame.outcome, Some("full")).unwrap());
            let future_a: Vec<usize> = (m + 1..k)
                .map(|j| {
                    ext.position(&frame.treatments[j], Some(&format!("nat{j}")))
                        .unwrap()
                })
                .collect();
            let past_l: Vec<usize> = frame
                .covariates_through(m)
                .iter()
                .map(|l| ext.position(l, Some("full")).unwrap())
                .collect();
            let mut x13 = future_l.clone();
            x13.extend(future_a.iter().copied());
            let (dev, skipped) = ext.conditional_independence_deviation(&x13, &[ind], &past_l)?;
            let d = dev.to_f64();
            b13.max_deviation = b13.max_deviation.max(d);
            b13.skipped_strata += skipped;
            b13.holds = b13.holds && d <= tol;
            let (dev, skipped) =
                ext.conditional_independence_deviation(&future_l, &[ind], &past_l)?;
            let d = dev.to_f64();
            b14.max_deviation = b14.max_deviation.max(d);
            b14.skipped_strata += skipped;
            b14.holds = b14.holds && d <= tol;
        }
    }
    Ok(BReport {
        b12,
        b12_violations: violations,
        b13,
        b14,
        zsets: z_sets(model, frame, regime)?,
    })
}

// ---------------------------------------------------------------------------
// modified treatment plans and their stochastic analogues

/// Declared map from a conditional treatment pmf row to a draw pmf row.
#[derive(Debug, Clone, PartialEq)]
pub enum Phi<P: Scalar> {
    /// Push the law through the regime's own natural-value rule.
    RegimePushforward,
    Identity,
    /// Deterministic relabeling a -> map[a]; mass is pushed forward.
    Relabel(Vec<usize>),
    /// Row-stochastic kernel applied to the pmf.
    Kernel(Vec<Vec<P>>),
}

impl<P: Scalar> Phi<P> {
    fn apply<F: Fn(usize) -> usize>(&self, pmf: &[P], regime_map: F) -> Vec<P> {
        let n = pmf.len();
        let mut out = vec![P::zero(); n];
        match self {
            Phi::RegimePushforward => {
                for (a, p) in pmf.iter().enumerate() {
                    let j = regime_map(a);
                    out[j] = out[j].clone() + p.clone();
                }
            }
            Phi::Identity => out = pmf.to_vec(),
            Phi::Relabel(map) => {
                for (a, p) in pmf.iter().enumerate() {
                    out[map[a]] = out[map[a]].clone() + p.clone();
                }
            }
            Phi::Kernel(k) => {
                for (a, p) in pmf.iter().enumerate() {
                    for j in 0..n {
                        out[j] = out[j].clone() + p.clone() * k[a][j].clone();
                    }
                }
            }
        }
        out
    }
}

/// The three regime-mean parameters built from a natural-value regime g1
/// and a draw map phi.
#[derive(Debug, Clone, PartialEq)]
pub struct MtpValues<P: Scalar> {
    /// Mean under g1 itself.
    pub mtp: P,
    /// Mean under the stochastic regime drawing from phi of the natural
    /// treatment law under g1.
    pub mtp_si_g1: P,
    /// Mean under the stochastic regime drawing from phi of the factual
    /// treatment law.
    pub mtp_si: P,
}

/// Build the stochastic regime whose interval-t table is phi applied to the
/// given per-history treatment laws; undefined rows are filled uniformly and
/// must stay unreachable under the resulting regime.
fn draw_regime<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    g1: &Regime<P>,
    phi: &Phi<P>,
    laws: &[Vec<Option<Vec<P>>>],
) -> Result<Regime<P>> {
    let mut regime = Regime::empty();
    let mut filled: Vec<(usize, usize)> = Vec::new();
    for t in 0..frame.intervals() {
        let a_name = &frame.treatments[t];
        let a_size = model.var(model.index_of(a_name)?).domain.size();
        let history = frame.history_vars(t);
        let hshape = history_shape(model, &history)?;
        let mut table = Vec::with_capacity(laws[t].len());
        for (ri, row) in laws[t].iter().enumerate() {
            match row {
                Some(pmf) => {
                    let hist_vals = hshape.unflat(ri);
                    let rule = g1.rules.get(a_name);
                    let mapped = phi.apply(pmf, |a_nat| match rule {
                        Some(Rule::NaturalValueDynamic { args, table }) => {
                            let pos = args_in_history(args, &history, a_name).unwrap();
                            let i = arg_index(
                                model,
                                &history,
                                &pos,
                                &hist_vals,
                                Some((a_size, a_nat)),
                            )
                            .unwrap();
                            table[i]
                        }
                        _ => a_nat,
                    });
                    table.push(mapped);
                }
                None => {
                    filled.push((t, ri));
                    table.push(vec![P::from_ratio(1, a_size as i64); a_size]);
                }
            }
        }
        regime = regime.set(
            a_name,
            Rule::Stochastic {
                args: history,
                table,
            },
        );
    }
    // a filled row that the regime can actually reach is a zero-mass event
    for (t, ri) in filled {
        let history = frame.history_vars(t);
        let vars: Vec<&str> = history.iter().map(|s| s.as_str()).collect();
        let reach = model.counterfactual_joint(&[WorldQuery::new("g", regime.clone(), &vars)])?;
        let hist_vals = history_shape(model, &history)?.unflat(ri);
        let event: Vec<(usize, usize)> = hist_vals.iter().copied().enumerate().collect();
        if reach.event_prob(&event).is_positive() {
            return Err(EngineError::ZeroMassEvent(format!(
                "draw law undefined at a reachable history (interval {t}: {})",
                history_desc(&reach, &event)
            )));
        }
    }
    Ok(regime)
}

/// Natural-value regime mean plus its two stochastic-draw analogues.
pub fn mtp_parameters<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    g1: &Regime<P>,
    phi: &Phi<P>,
) -> Result<MtpValues<P>> {
    frame.validate(model)?;
    model.validate_regime(g1)?;
    let k = frame.intervals();
    let mtp = regime_mean(model, frame, g1)?;
    // law of the natural treatment values under g1: intervene with g1 only
    // on the intervals before t
    let mut g1_laws = Vec::with_capacity(k);
    let mut fact_laws = Vec::with_capacity(k);
    for t in 0..k {
        let mut prefix = Regime::empty();
        for j in 0..t {
            if let Some(rule) = g1.rules.get(&frame.treatments[j]) {
                prefix = prefix.set(&frame.treatments[j], rule.clone());
            }
        }
        g1_laws.push(treatment_law(model, frame, t, &prefix)?);
        fact_laws.push(treatment_law(model, frame, t, &Regime::empty())?);
    }
    let g2 = draw_regime(model, frame, g1, phi, &g1_laws)?;
    let g3 = draw_regime(model, frame, g1, phi, &fact_laws)?;
    Ok(MtpValues {
        mtp,
        mtp_si_g1: regime_mean(model, frame, &g2)?,
        mtp_si: regime_mean(model, frame, &g3)?,
    })
}

/// The stochastic regime drawing from phi of the factual treatment law
/// (the g3 construction), exposed for g-formula comparisons.
pub fn factual_draw_regime<P: Scalar>(
    model: &ValidatedModel<P>,
    frame: &LongitudinalFrame,
    g1: &Regime<P>,
    phi: &Phi<P>,
) -> Result<Regime<P>> {
    let laws = (0..frame.intervals())
        .map(|t| treatment_law(model, frame, t, &Regime::empty()))
        .collect::<Result<Vec<_>>>()?;
    draw_regime(model, frame, g1, phi, &laws)
}
