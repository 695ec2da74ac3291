//! Discrete structural causal models with exogenous noise: validation,
//! counterfactual world evaluation by recursive substitution, and exact
//! (cross-world) joint distributions by noise enumeration.

use std::collections::BTreeMap;

use crate::error::{EngineError, Result};
use crate::num::Scalar;
use crate::pmf::{JointPmf, PmfVar};
use crate::table::Shape;

/// Ordered finite state space of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    labels: Vec<String>,
}

impl Domain {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(EngineError::InvalidPmf("<domain>".into(), "empty domain".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(EngineError::Spec {
                    pointer: "/domain".into(),
                    message: format!("duplicate label `{l}`"),
                });
            }
        }
        Ok(Domain { labels })
    }

    pub fn binary() -> Self {
        Domain {
            labels: vec!["0".into(), "1".into()],
        }
    }

    pub fn indexed(prefix: &str, n: usize) -> Self {
        Domain {
            labels: (0..n).map(|i| format!("{prefix}{i}")).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Exogenous error term with an explicit pmf.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<P: Scalar> {
    pub domain: Domain,
    pub pmf: Vec<P>,
}

/// Total function (parent values, noise value) -> output label index.
/// Dense table; shape is parent domain sizes followed by the noise domain size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralFunction {
    pub parents: Vec<String>,
    pub outputs: Vec<usize>,
}

/// Variable roles used by mediation and longitudinal frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Baseline,
    Treatment,
    PostTreatment,
    Mediator,
    Outcome,
    TimeIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<P: Scalar> {
    pub name: String,
    pub domain: Domain,
    pub noise: NoiseSpec<P>,
    pub func: StructuralFunction,
    pub observed: bool,
    pub role: Option<Role>,
}

/// A finite-domain NPSEM: every variable is a deterministic function of its
/// parents and its own independent error term.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalModelSpec<P: Scalar> {
    pub variables: Vec<Variable<P>>,
}

/// Per-intervened-variable rule of an intervention plan.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule<P: Scalar> {
    /// Fix the variable to a label index.
    Static(usize),
    /// Deterministic function of realized preceding variables.
    Dynamic { args: Vec<String>, table: Vec<usize> },
    /// Deterministic function of the variable's own natural value plus
    /// preceding variables; the natural value is the first table axis.
    NaturalValueDynamic { args: Vec<String>, table: Vec<usize> },
    /// Stochastic rule: each history row is a pmf over the variable's domain.
    Stochastic { args: Vec<String>, table: Vec<Vec<P>> },
}

/// Intervention plan: rules keyed by intervened variable name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Regime<P: Scalar> {
    pub rules: BTreeMap<String, Rule<P>>,
}

impl<P: Scalar> Regime<P> {
    pub fn empty() -> Self {
        Regime {
            rules: BTreeMap::new(),
        }
    }

    pub fn set(mut self, var: &str, rule: Rule<P>) -> Self {
        self.rules.insert(var.to_string(), rule);
        self
    }

    pub fn static_value(var: &str, label: usize) -> Self {
        Regime::empty().set(var, Rule::Static(label))
    }

    pub fn has_stochastic(&self) -> bool {
        self.rules
            .values()
            .any(|r| matches!(r, Rule::Stochastic { .. }))
    }
}

const FLOAT_MASS_TOL: f64 = 1e-12;

fn check_pmf<P: Scalar>(name: &str, pmf: &[P], size: usize) -> Result<()> {
    if pmf.len() != size {
        return Err(EngineError::InvalidPmf(
            name.to_string(),
            format!("pmf has {} entries, domain has {size}", pmf.len()),
        ));
    }
    let mut total = P::zero();
    for p in pmf {
        if *p < P::zero() {
            return Err(EngineError::InvalidPmf(name.to_string(), "negative mass".into()));
        }
        total = total + p.clone();
    }
    let ok = if P::exact() {
        total == P::one()
    } else {
        (total.clone() - P::one()).abs().to_f64() <= FLOAT_MASS_TOL
    };
    if !ok {
        return Err(EngineError::InvalidPmf(
            name.to_string(),
            format!("mass sums to {:?}", total.to_f64()),
        ));
    }
    Ok(())
}

/// A model whose acyclicity, table totality and pmf validity are certified.
/// The declared variable order is the canonical topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel<P: Scalar> {
    spec: CausalModelSpec<P>,
    parent_idx: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
}

/// Certify a model spec. Errors name the offending variable.
pub fn validate_model<P: Scalar>(spec: CausalModelSpec<P>) -> Result<ValidatedModel<P>> {
    let mut index = BTreeMap::new();
    for (i, v) in spec.variables.iter().enumerate() {
        if index.insert(v.name.clone(), i).is_some() {
            return Err(EngineError::Spec {
                pointer: format!("/variables/{i}/name"),
                message: format!("duplicate variable `{}`", v.name),
            });
        }
    }
    let mut parent_idx = Vec::with_capacity(spec.variables.len());
    for (i, v) in spec.variables.iter().enumerate() {
        let mut pidx = Vec::with_capacity(v.func.parents.len());
        for p in &v.func.parents {
            let j = *index
                .get(p)
                .ok_or_else(|| EngineError::UnknownVariable(p.clone()))?;
            if j >= i {
                // parents must precede children in the declared order
                return Err(EngineError::CyclicGraph(v.name.clone()));
            }
            pidx.push(j);
        }
        let mut shape: Vec<usize> = pidx
            .iter()
            .map(|&j| spec.variables[j].domain.size())
            .collect();
        shape.push(v.noise.domain.size());
        let expected = Shape(shape).len();
        if v.func.outputs.len() != expected {
            return Err(EngineError::IncompleteTable(v.name.clone()));
        }
        if v.func.outputs.iter().any(|&o| o >= v.domain.size()) {
            return Err(EngineError::IncompleteTable(v.name.clone()));
        }
        check_pmf(&v.name, &v.noise.pmf, v.noise.domain.size())?;
        parent_idx.push(pidx);
    }
    Ok(ValidatedModel {
        spec,
        parent_idx,
        index,
    })
}

/// One queried world of a cross-world joint: a regime plus the variables to
/// read from it. An empty world label means the factual (empty-regime) world.
#[derive(Debug, Clone)]
pub struct WorldQuery<P: Scalar> {
    pub label: Option<String>,
    pub regime: Regime<P>,
    pub vars: Vec<String>,
}

impl<P: Scalar> WorldQuery<P> {
    pub fn factual(vars: &[&str]) -> Self {
        WorldQuery {
            label: None,
            regime: Regime::empty(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn new(label: &str, regime: Regime<P>, vars: &[&str]) -> Self {
        WorldQuery {
            label: Some(label.to_string()),
            regime,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl<P: Scalar> ValidatedModel<P> {
    pub fn spec(&self) -> &CausalModelSpec<P> {
        &self.spec
    }

    pub fn variables(&self) -> &[Variable<P>] {
        &self.spec.variables
    }

    pub fn n_vars(&self) -> usize {
        self.spec.variables.len()
    }

    pub fn var(&self, i: usize) -> &Variable<P> {
        &self.spec.variables[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| EngineError::UnknownVariable(name.to_string()))
    }

    pub fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parent_idx[i]
    }

    fn rule_args_valid(&self, var: usize, args: &[String]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(args.len());
        for a in args {
            let j = self.index_of(a)?;
            if j >= var {
                return Err(EngineError::InvalidRegime(format!(
                    "rule on `{}` references `{a}`, which does not precede it",
                    self.var(var).name
                )));
            }
            idx.push(j);
        }
        Ok(idx)
    }

    /// Check a regime against this model: rules reference only preceding
    /// variables, tables are total, stochastic slices are valid pmfs.
    pub fn validate_regime(&self, regime: &Regime<P>) -> Result<()> {
        for (name, rule) in &regime.rules {
            let i = self.index_of(name)?;
            let dsize = self.var(i).domain.size();
            match rule {
                Rule::Static(v) => {
                    if *v >= dsize {
                        return Err(EngineError::InvalidRegime(format!(
                            "static value out of domain for `{name}`"
                        )));
                    }
                }
                Rule::Dynamic { args, table } => {
                    let aidx = self.rule_args_valid(i, args)?;
                    let shape: Vec<usize> =
                        aidx.iter().map(|&j| self.var(j).domain.size()).collect();
                    if table.len() != Shape(shape).len() || table.iter().any(|&o| o >= dsize) {
                        return Err(EngineError::InvalidRegime(format!(
                            "dynamic table for `{name}` is not total"
                        )));
                    }
                }
                Rule::NaturalValueDynamic { args, table } => {
                    let aidx = self.rule_args_valid(i, args)?;
                    let mut shape = vec![dsize];
                    shape.extend(aidx.iter().map(|&j| self.var(j).domain.size()));
                    if table.len() != Shape(shape).len() || table.iter().any(|&o| o >= dsize) {
                        return Err(EngineError::InvalidRegime(format!(
                            "natural-value table for `{name}` is not total"
                        )));
                    }
                }
                Rule::Stochastic { args, table } => {
                    let aidx = self.rule_args_valid(i, args)?;
                    let shape: Vec<usize> =
                        aidx.iter().map(|&j| self.var(j).domain.size()).collect();
                    if table.len() != Shape(shape).len() {
                        return Err(EngineError::InvalidRegime(format!(
                            "stochastic table for `{name}` is not total"
                        )));
                    }
                    for row in table {
                        check_pmf(name, row, dsize)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn structural_value(&self, i: usize, world: &[usize], noise: &[usize]) -> usize {
        let v = self.var(i);
        let mut shape: Vec<usize> = self.parent_idx[i]
            .iter()
            .map(|&j| self.var(j).domain.size())
            .collect();
        shape.push(v.noise.domain.size());
        let mut idx: Vec<usize> = self.parent_idx[i].iter().map(|&j| world[j]).collect();
        idx.push(noise[i]);
        v.func.outputs[Shape(shape).flat(&idx)]
    }

    fn rule_table_value(
        &self,
        table: &[usize],
        arg_idx: &[usize],
        lead: Option<(usize, usize)>,
        world: &[usize],
    ) -> usize {
        let mut shape = Vec::new();
        let mut idx = Vec::new();
        if let Some((size, val)) = lead {
            shape.push(size);
            idx.push(val);
        }
        for &j in arg_idx {
            shape.push(self.var(j).domain.size());
            idx.push(world[j]);
        }
        table[Shape(shape).flat(&idx)]
    }

    /// Deterministic world: every variable assigned in topological order;
    /// intervened variables take regime-dictated values, others take
    /// f_V(parents, noise). Stochastic rules require explicit draws.
    pub fn evaluate_world(
        &self,
        noise: &[usize],
        regime: &Regime<P>,
        draws: Option<&BTreeMap<String, usize>>,
    ) -> Result<Vec<usize>> {
        if noise.len() != self.n_vars() {
            return Err(EngineError::MissingNoise(format!(
                "expected {} noise values, got {}",
                self.n_vars(),
                noise.len()
            )));
        }
        let mut world = vec![0usize; self.n_vars()];
        for i in 0..self.n_vars() {
            let name = &self.var(i).name;
            let value = match regime.rules.get(name) {
                None => self.structural_value(i, &world, noise),
                Some(Rule::Static(v)) => *v,
                Some(Rule::Dynamic { args, table }) => {
                    let aidx = self.rule_args_valid(i, args)?;
                    self.rule_table_value(table, &aidx, None, &world)
                }
                Some(Rule::NaturalValueDynamic { args, table }) => {
                    let natural = self.structural_value(i, &world, noise);
                    let aidx = self.rule_args_valid(i, args)?;
                    self.rule_table_value(
                        table,
                        &aidx,
                        Some((self.var(i).domain.size(), natural)),
                        &world,
                    )
                }
                Some(Rule::Stochastic { .. }) => {
                    let draw = draws
                        .and_then(|d| d.get(name))
                        .copied()
                        .ok_or_else(|| EngineError::MissingRandomizer(name.clone()))?;
                    draw
                }
            };
            world[i] = value;
        }
        Ok(world)
    }

    /// All worlds reachable from one noise configuration under a regime,
    /// with stochastic rules integrated analytically (each draw becomes a
    /// weighted branch). Weights multiply to the regime's draw probability.
    pub fn weighted_worlds(&self, noise: &[usize], regime: &Regime<P>) -> Result<Vec<(Vec<usize>, P)>> {
        let mut frontier: Vec<(Vec<usize>, P)> = vec![(vec![0usize; self.n_vars()], P::one())];
        for i in 0..self.n_vars() {
            let name = &self.var(i).name;
            match regime.rules.get(name) {
                Some(Rule::Stochastic { args, table }) => {
                    let aidx = self.rule_args_valid(i, args)?;
                    let shape = Shape(aidx.iter().map(|&j| self.var(j).domain.size()).collect());
                    let mut next = Vec::with_capacity(frontier.len());
                    for (world, w) in frontier {
                        let idx: Vec<usize> = aidx.iter().map(|&j| world[j]).collect();
                        let row = &table[shape.flat(&idx)];
                        for (val, p) in row.iter().enumerate() {
                            if p.is_zero() {
                                continue;
                            }
                            let mut nw = world.clone();
                            nw[i] = val;
                            next.push((nw, w.clone() * p.clone()));
                        }
                    }
                    frontier = next;
                }
                other => {
                    for (world, _) in frontier.iter_mut() {
                        let value = match other {
                            None => self.structural_value(i, world, noise),
                            Some(Rule::Static(v)) => *v,
                            Some(Rule::Dynamic { args, table }) => {
                                let aidx = self.rule_args_valid(i, args)?;
                                self.rule_table_value(table, &aidx, None, world)
                            }
                            Some(Rule::NaturalValueDynamic { args, table }) => {
                                let natural = self.structural_value(i, world, noise);
                                let aidx = self.rule_args_valid(i, args)?;
                                self.rule_table_value(
                                    table,
                                    &aidx,
                                    Some((self.var(i).domain.size(), natural)),
                                    world,
                                )
                            }
                            Some(Rule::Stochastic { .. }) => unreachable!(),
                        };
                        world[i] = value;
                    }
                }
            }
        }
        Ok(frontier)
    }

    /// Visit every exogenous noise configuration with its product mass.
    pub fn for_each_noise<F: FnMut(&[usize], P) -> Result<()>>(&self, mut f: F) -> Result<()> {
        let shape = Shape(
            self.spec
                .variables
                .iter()
                .map(|v| v.noise.domain.size())
                .collect(),
        );
        for noise in shape.iter() {
            let mut mass = P::one();
            for (i, &e) in noise.iter().enumerate() {
                mass = mass * self.var(i).noise.pmf[e].clone();
            }
            if mass.is_zero() {
                continue;
            }
            f(&noise, mass)?;
        }
        Ok(())
    }

    /// Exact cross-world joint: for each noise configuration, evaluate each
    /// queried world once (branching analytically over stochastic draws,
    /// independent across worlds) and accumulate mass onto the requested tuple.
    pub fn counterfactual_joint(&self, worlds: &[WorldQuery<P>]) -> Result<JointPmf<P>> {
        let mut out_vars = Vec::new();
        let mut selections: Vec<Vec<usize>> = Vec::new();
        for wq in worlds {
            self.validate_regime(&wq.regime)?;
            let mut sel = Vec::new();
            for name in &wq.vars {
                let i = self.index_of(name)?;
                sel.push(i);
                out_vars.push(PmfVar {
                    name: name.clone(),
                    world: wq.label.clone(),
                    labels: self.var(i).domain.labels().to_vec(),
                });
            }
            selections.push(sel);
        }
        let out_shape = Shape(out_vars.iter().map(|v| v.labels.len()).collect());
        let mut mass = vec![P::zero(); out_shape.len()];
        self.for_each_noise(|noise, base| {
            // per-world weighted branches, combined by cartesian product
            let mut combos: Vec<(Vec<usize>, P)> = vec![(Vec::new(), base)];
            for (wq, sel) in worlds.iter().zip(&selections) {
                let branches = self.weighted_worlds(noise, &wq.regime)?;
                let mut next = Vec::with_capacity(combos.len() * branches.len());
                for (prefix, w) in &combos {
                    for (world, bw) in &branches {
                        let mut tuple = prefix.clone();
                        tuple.extend(sel.iter().map(|&i| world[i]));
                        next.push((tuple, w.clone() * bw.clone()));
                    }
                }
                combos = next;
            }
            for (tuple, w) in combos {
                let o = out_shape.flat(&tuple);
                mass[o] = mass[o].clone() + w;
            }
            Ok(())
        })?;
        Ok(JointPmf::new(out_vars, mass))
    }

    /// Joint over observed-flagged variables under the empty regime,
    /// latents marginalized out.
    pub fn observed_law(&self) -> Result<JointPmf<P>> {
        let observed: Vec<&str> = self
            .spec
            .variables
            .iter()
            .filter(|v| v.observed)
            .map(|v| v.name.as_str())
            .collect();
        self.counterfactual_joint(&[WorldQuery::factual(&observed)])
    }
}
