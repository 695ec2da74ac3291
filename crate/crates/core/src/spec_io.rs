//! Model-spec files: a JSON document carrying the structural model, named
//! regimes and analysis metadata (frames, model classes), so every CLI run
//! is a self-contained, reproducible artifact.
//!
//! Schema violations surface as [`EngineError::Spec`] with a JSON-pointer
//! location. Probabilities are written as literals — fraction strings such
//! as `"1/2"` parse exactly in rational mode; decimal literals parse to the
//! exact decimal.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{EngineError, Result};
use crate::identification::{ClassPredicate, ModelClassSpec, SkeletonVar};
use crate::longitudinal::LongitudinalFrame;
use crate::mediation::MediationFrame;
use crate::num::Scalar;
use crate::scm::{
    validate_model, CausalModelSpec, Domain, NoiseSpec, Regime, Role, Rule, StructuralFunction,
    ValidatedModel, Variable,
};
use crate::table::Shape;

/// Everything a spec file carries.
#[derive(Debug, Clone)]
pub struct SpecFile<P: Scalar> {
    pub model: ValidatedModel<P>,
    pub regimes: BTreeMap<String, Regime<P>>,
    pub mediation_frame: Option<MediationFrame>,
    pub longitudinal_frame: Option<LongitudinalFrame>,
    pub classes: BTreeMap<String, ModelClassSpec>,
}

fn err(pointer: &str, message: impl Into<String>) -> EngineError {
    EngineError::Spec {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn as_object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(ptr, "expected an object"))
}

fn as_array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(ptr, "expected an array"))
}

fn as_str<'a>(v: &'a Value, ptr: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| err(ptr, "expected a string"))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, ptr: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| err(ptr, format!("missing required key `{key}`")))
}

fn string_list(v: &Value, ptr: &str) -> Result<Vec<String>> {
    as_array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, s)| Ok(as_str(s, &format!("{ptr}/{i}"))?.to_string()))
        .collect()
}

fn parse_prob<P: Scalar>(v: &Value, ptr: &str) -> Result<P> {
    let parsed = match v {
        Value::String(s) => P::from_literal(s),
        Value::Number(n) => P::from_literal(&n.to_string()),
        _ => None,
    };
    parsed.ok_or_else(|| err(ptr, "expected a probability literal (number, decimal string or `n/d`)"))
}

fn parse_domain(v: &Value, ptr: &str) -> Result<Domain> {
    let labels = string_list(v, ptr)?;
    Domain::new(labels).map_err(|e| err(ptr, e.to_string()))
}

fn parse_role(v: &Value, ptr: &str) -> Result<Role> {
    match as_str(v, ptr)? {
        "baseline" => Ok(Role::Baseline),
        "treatment" => Ok(Role::Treatment),
        "post_treatment" => Ok(Role::PostTreatment),
        "mediator" => Ok(Role::Mediator),
        "outcome" => Ok(Role::Outcome),
        "time_index" => Ok(Role::TimeIndex),
        other => Err(err(ptr, format!("unknown role `{other}`"))),
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::Baseline => "baseline",
        Role::Treatment => "treatment",
        Role::PostTreatment => "post_treatment",
        Role::Mediator => "mediator",
        Role::Outcome => "outcome",
        Role::TimeIndex => "time_index",
    }
}

/// Parse one variable's dense table from explicit `{parents, noise, out}`
/// rows; every (parents, noise) cell must appear exactly once.
fn parse_table(
    rows: &Value,
    ptr: &str,
    parent_domains: &[&Domain],
    noise: &Domain,
    out: &Domain,
) -> Result<Vec<usize>> {
    let rows = as_array(rows, ptr)?;
    let mut shape: Vec<usize> = parent_domains.iter().map(|d| d.size()).collect();
    shape.push(noise.size());
    let shape = Shape(shape);
    let mut outputs: Vec<Option<usize>> = vec![None; shape.len()];
    for (i, row) in rows.iter().enumerate() {
        let rptr = format!("{ptr}/{i}");
        let row = as_object(row, &rptr)?;
        let pvals = as_array(get(row, "parents", &rptr)?, &format!("{rptr}/parents"))?;
        if pvals.len() != parent_domains.len() {
            return Err(err(
                &format!("{rptr}/parents"),
                format!("expected {} parent values", parent_domains.len()),
            ));
        }
        let mut idx = Vec::with_capacity(pvals.len() + 1);
        for (j, (pv, dom)) in pvals.iter().zip(parent_domains).enumerate() {
            let pptr = format!("{rptr}/parents/{j}");
            let label = as_str(pv, &pptr)?;
            idx.push(
                dom.index_of(label)
                    .ok_or_else(|| err(&pptr, format!("label `{label}` not in parent domain")))?,
            );
        }
        let nptr = format!("{rptr}/noise");
        let nlabel = as_str(get(row, "noise", &rptr)?, &nptr)?;
        idx.push(
            noise
                .index_of(nlabel)
                .ok_or_else(|| err(&nptr, format!("label `{nlabel}` not in noise domain")))?,
        );
        let optr = format!("{rptr}/out");
        let olabel = as_str(get(row, "out", &rptr)?, &optr)?;
        let oidx = out
            .index_of(olabel)
            .ok_or_else(|| err(&optr, format!("label `{olabel}` not in domain")))?;
        let flat = shape.flat(&idx);
        if outputs[flat].is_some() {
            return Err(err(&rptr, "duplicate table row"));
        }
        outputs[flat] = Some(oidx);
    }
    outputs
        .into_iter()
        .enumerate()
        .map(|(flat, o)| {
            o.ok_or_else(|| {
                let idx = shape.unflat(flat);
                err(ptr, format!("missing table row for cell {idx:?}"))
            })
        })
        .collect()
}

fn parse_variable<P: Scalar>(
    v: &Value,
    ptr: &str,
    seen: &BTreeMap<String, Domain>,
) -> Result<Variable<P>> {
    let obj = as_object(v, ptr)?;
    let name = as_str(get(obj, "name", ptr)?, &format!("{ptr}/name"))?.to_string();
    let domain = parse_domain(get(obj, "domain", ptr)?, &format!("{ptr}/domain"))?;
    let parents = string_list(get(obj, "parents", ptr)?, &format!("{ptr}/parents"))?;
    let nptr = format!("{ptr}/noise");
    let nobj = as_object(get(obj, "noise", ptr)?, &nptr)?;
    let noise_domain = parse_domain(get(nobj, "domain", &nptr)?, &format!("{nptr}/domain"))?;
    let pmf_ptr = format!("{nptr}/pmf");
    let pmf: Vec<P> = as_array(get(nobj, "pmf", &nptr)?, &pmf_ptr)?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_prob(p, &format!("{pmf_ptr}/{i}")))
        .collect::<Result<_>>()?;
    let parent_domains: Vec<&Domain> = parents
        .iter()
        .map(|p| {
            seen.get(p)
                .ok_or_else(|| err(&format!("{ptr}/parents"), format!("unknown parent `{p}`")))
        })
        .collect::<Result<_>>()?;
    let outputs = parse_table(
        get(obj, "table", ptr)?,
        &format!("{ptr}/table"),
        &parent_domains,
        &noise_domain,
        &domain,
    )?;
    let observed = match obj.get("observed") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(err(&format!("{ptr}/observed"), "expected a boolean")),
        None => true,
    };
    let role = match obj.get("role") {
        Some(Value::Null) | None => None,
        Some(r) => Some(parse_role(r, &format!("{ptr}/role"))?),
    };
    Ok(Variable {
        name,
        domain,
        noise: NoiseSpec {
            domain: noise_domain,
            pmf,
        },
        func: StructuralFunction { parents, outputs },
        observed,
        role,
    })
}

fn label_index(v: &Value, ptr: &str, domain: &Domain) -> Result<usize> {
    let label = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(err(ptr, "expected a domain label")),
    };
    domain
        .index_of(&label)
        .ok_or_else(|| err(ptr, format!("label `{label}` not in domain")))
}

fn rule_table_shape<P: Scalar>(
    model: &ValidatedModel<P>,
    args: &[String],
    ptr: &str,
) -> Result<usize> {
    let mut n = 1usize;
    for a in args {
        let i = model
            .index_of(a)
            .map_err(|_| err(ptr, format!("unknown rule argument `{a}`")))?;
        n *= model.var(i).domain.size();
    }
    Ok(n)
}

fn parse_rule<P: Scalar>(
    v: &Value,
    ptr: &str,
    model: &ValidatedModel<P>,
    target: &Domain,
) -> Result<Rule<P>> {
    let obj = as_object(v, ptr)?;
    let kind = as_str(get(obj, "type", ptr)?, &format!("{ptr}/type"))?;
    let out_table = |key: &str, rows: usize| -> Result<Vec<usize>> {
        let tptr = format!("{ptr}/{key}");
        let cells = as_array(get(obj, key, ptr)?, &tptr)?;
        if cells.len() != rows {
            return Err(err(&tptr, format!("expected {rows} table entries")));
        }
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| label_index(c, &format!("{tptr}/{i}"), target))
            .collect()
    };
    match kind {
        "static" => Ok(Rule::Static(label_index(
            get(obj, "value", ptr)?,
            &format!("{ptr}/value"),
            target,
        )?)),
        "dynamic" => {
            let args = string_list(get(obj, "args", ptr)?, &format!("{ptr}/args"))?;
            let rows = rule_table_shape(model, &args, &format!("{ptr}/args"))?;
            Ok(Rule::Dynamic {
                table: out_table("table", rows)?,
                args,
            })
        }
        "natural_value_dynamic" => {
            let args = string_list(get(obj, "args", ptr)?, &format!("{ptr}/args"))?;
            let rows = target.size() * rule_table_shape(model, &args, &format!("{ptr}/args"))?;
            Ok(Rule::NaturalValueDynamic {
                table: out_table("table", rows)?,
                args,
            })
        }
        "stochastic" => {
            let args = string_list(get(obj, "args", ptr)?, &format!("{ptr}/args"))?;
            let rows = rule_table_shape(model, &args, &format!("{ptr}/args"))?;
            let tptr = format!("{ptr}/table");
            let table = as_array(get(obj, "table", ptr)?, &tptr)?;
            if table.len() != rows {
                return Err(err(&tptr, format!("expected {rows} pmf rows")));
            }
            let table = table
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let rptr = format!("{tptr}/{i}");
                    let row = as_array(row, &rptr)?;
                    if row.len() != target.size() {
                        return Err(err(&rptr, format!("expected {} entries", target.size())));
                    }
                    row.iter()
                        .enumerate()
                        .map(|(j, p)| parse_prob(p, &format!("{rptr}/{j}")))
                        .collect()
                })
                .collect::<Result<_>>()?;
            Ok(Rule::Stochastic { args, table })
        }
        other => Err(err(&format!("{ptr}/type"), format!("unknown rule type `{other}`"))),
    }
}

fn parse_mediation_frame<P: Scalar>(
    v: &Value,
    ptr: &str,
    model: &ValidatedModel<P>,
) -> Result<MediationFrame> {
    let obj = as_object(v, ptr)?;
    let treatment = as_str(get(obj, "treatment", ptr)?, &format!("{ptr}/treatment"))?.to_string();
    let tdom = model
        .index_of(&treatment)
        .map(|i| model.var(i).domain.clone())
        .map_err(|_| err(&format!("{ptr}/treatment"), format!("unknown variable `{treatment}`")))?;
    Ok(MediationFrame {
        baseline: string_list(get(obj, "baseline", ptr)?, &format!("{ptr}/baseline"))?,
        post: string_list(get(obj, "post", ptr)?, &format!("{ptr}/post"))?,
        mediator: as_str(get(obj, "mediator", ptr)?, &format!("{ptr}/mediator"))?.to_string(),
        outcome: as_str(get(obj, "outcome", ptr)?, &format!("{ptr}/outcome"))?.to_string(),
        a: label_index(get(obj, "a", ptr)?, &format!("{ptr}/a"), &tdom)?,
        a_star: label_index(get(obj, "a_star", ptr)?, &format!("{ptr}/a_star"), &tdom)?,
        treatment,
    })
}

fn parse_longitudinal_frame(v: &Value, ptr: &str) -> Result<LongitudinalFrame> {
    let obj = as_object(v, ptr)?;
    let cptr = format!("{ptr}/covariates");
    let covariates = as_array(get(obj, "covariates", ptr)?, &cptr)?
        .iter()
        .enumerate()
        .map(|(i, block)| string_list(block, &format!("{cptr}/{i}")))
        .collect::<Result<_>>()?;
    Ok(LongitudinalFrame {
        covariates,
        treatments: string_list(get(obj, "treatments", ptr)?, &format!("{ptr}/treatments"))?,
        outcome: as_str(get(obj, "outcome", ptr)?, &format!("{ptr}/outcome"))?.to_string(),
    })
}

fn parse_class(
    v: &Value,
    ptr: &str,
    mediation: Option<&MediationFrame>,
    longitudinal: Option<&LongitudinalFrame>,
) -> Result<ModelClassSpec> {
    let obj = as_object(v, ptr)?;
    let tol = match obj.get("tol") {
        Some(t) => t
            .as_f64()
            .ok_or_else(|| err(&format!("{ptr}/tol"), "expected a number"))?,
        None => 1e-9,
    };
    if let Some(b) = obj.get("builtin") {
        let bptr = format!("{ptr}/builtin");
        return match as_str(b, &bptr)? {
            "m1" => Ok(crate::identification::class_m1(tol)),
            "m2" => Ok(crate::identification::class_m2(tol)),
            other => Err(err(&bptr, format!("unknown builtin class `{other}`"))),
        };
    }
    let sptr = format!("{ptr}/skeleton");
    let skeleton = as_array(get(obj, "skeleton", ptr)?, &sptr)?
        .iter()
        .enumerate()
        .map(|(i, sv)| {
            let vptr = format!("{sptr}/{i}");
            let sv = as_object(sv, &vptr)?;
            let name = as_str(get(sv, "name", &vptr)?, &format!("{vptr}/name"))?;
            let parents = string_list(get(sv, "parents", &vptr)?, &format!("{vptr}/parents"))?;
            let mut var = SkeletonVar::new(name, &[]);
            var.parents = parents;
            if let Some(d) = sv.get("domain_size") {
                var.domain_size = d
                    .as_u64()
                    .ok_or_else(|| err(&format!("{vptr}/domain_size"), "expected an integer"))?
                    as usize;
            }
            if let Some(n) = sv.get("noise_card") {
                var.noise_card = n
                    .as_u64()
                    .ok_or_else(|| err(&format!("{vptr}/noise_card"), "expected an integer"))?
                    as usize;
            }
            if let Some(Value::Bool(b)) = sv.get("observed") {
                var.observed = *b;
            }
            if let Some(Value::Bool(b)) = sv.get("randomized") {
                var.randomized = *b;
            }
            Ok(var)
        })
        .collect::<Result<_>>()?;
    let pptr = format!("{ptr}/predicates");
    let predicates = as_array(get(obj, "predicates", ptr)?, &pptr)?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let iptr = format!("{pptr}/{i}");
            let p = as_object(p, &iptr)?;
            let kind = as_str(get(p, "type", &iptr)?, &format!("{iptr}/type"))?;
            let need_med = || {
                mediation
                    .cloned()
                    .ok_or_else(|| err(&iptr, "predicate needs meta.mediation_frame"))
            };
            let need_long = || {
                longitudinal
                    .cloned()
                    .ok_or_else(|| err(&iptr, "predicate needs meta.longitudinal_frame"))
            };
            match kind {
                "m1" => Ok(ClassPredicate::M1(need_med()?)),
                "m2" => Ok(ClassPredicate::M2(need_med()?)),
                "b13" => Ok(ClassPredicate::B13(need_long()?)),
                "b14" => Ok(ClassPredicate::B14(need_long()?)),
                "full_support" => Ok(ClassPredicate::FullSupport(string_list(
                    get(p, "vars", &iptr)?,
                    &format!("{iptr}/vars"),
                )?)),
                other => Err(err(&format!("{iptr}/type"), format!("unknown predicate `{other}`"))),
            }
        })
        .collect::<Result<_>>()?;
    Ok(ModelClassSpec {
        name: ptr.rsplit('/').next().unwrap_or("custom").to_string(),
        skeleton,
        predicates,
        tol,
    })
}

/// Parse and validate a complete spec file.
pub fn parse_spec<P: Scalar>(text: &str) -> Result<SpecFile<P>> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| err("", format!("invalid JSON: {e}")))?;
    let root = as_object(&root, "")?;
    let vptr = "/variables";
    let var_values = as_array(get(root, "variables", "")?, vptr)?;
    let mut seen: BTreeMap<String, Domain> = BTreeMap::new();
    let mut variables = Vec::with_capacity(var_values.len());
    for (i, v) in var_values.iter().enumerate() {
        let var = parse_variable::<P>(v, &format!("{vptr}/{i}"), &seen)?;
        seen.insert(var.name.clone(), var.domain.clone());
        variables.push(var);
    }
    let model = validate_model(CausalModelSpec { variables })?;

    let mut mediation_frame = None;
    let mut longitudinal_frame = None;
    let mut classes = BTreeMap::new();
    if let Some(meta) = root.get("meta") {
        let mptr = "/meta";
        let meta = as_object(meta, mptr)?;
        if let Some(f) = meta.get("mediation_frame") {
            let frame = parse_mediation_frame(f, &format!("{mptr}/mediation_frame"), &model)?;
            frame
                .validate(&model)
                .map_err(|e| err(&format!("{mptr}/mediation_frame"), e.to_string()))?;
            mediation_frame = Some(frame);
        }
        if let Some(f) = meta.get("longitudinal_frame") {
            let frame = parse_longitudinal_frame(f, &format!("{mptr}/longitudinal_frame"))?;
            frame
                .validate(&model)
                .map_err(|e| err(&format!("{mptr}/longitudinal_frame"), e.to_string()))?;
            longitudinal_frame = Some(frame);
        }
        if let Some(c) = meta.get("classes") {
            let cptr = format!("{mptr}/classes");
            for (name, spec) in as_object(c, &cptr)? {
                classes.insert(
                    name.clone(),
                    parse_class(
                        spec,
                        &format!("{cptr}/{name}"),
                        mediation_frame.as_ref(),
                        longitudinal_frame.as_ref(),
                    )?,
                );
            }
        }
    }

    let mut regimes = BTreeMap::new();
    if let Some(r) = root.get("regimes") {
        let rptr = "/regimes";
        for (name, rules) in as_object(r, rptr)? {
            let nptr = format!("{rptr}/{name}");
            let mut regime = Regime::empty();
            for (var, rule) in as_object(rules, &nptr)? {
                let vptr = format!("{nptr}/{var}");
                let target = model
                    .index_of(var)
                    .map(|i| model.var(i).domain.clone())
                    .map_err(|_| err(&vptr, format!("unknown variable `{var}`")))?;
                regime = regime.set(var, parse_rule(rule, &vptr, &model, &target)?);
            }
            model
                .validate_regime(&regime)
                .map_err(|e| err(&nptr, e.to_string()))?;
            regimes.insert(name.clone(), regime);
        }
    }

    Ok(SpecFile {
        model,
        regimes,
        mediation_frame,
        longitudinal_frame,
        classes,
    })
}

// ---------------------------------------------------------------------------
// serialization

fn prob_value<P: Scalar>(p: &P) -> Value {
    Value::String(p.to_literal())
}

/// Serialize a model to the spec-file `variables` schema. Probabilities are
/// written as literals that re-parse to the same value in the same mode.
pub fn model_to_json<P: Scalar>(model: &ValidatedModel<P>) -> Value {
    let variables: Vec<Value> = model
        .spec()
        .variables
        .iter()
        .map(|v| {
            let mut shape: Vec<usize> = v
                .func
                .parents
                .iter()
                .map(|p| {
                    let i = model.index_of(p).expect("validated parent");
                    model.var(i).domain.size()
                })
                .collect();
            shape.push(v.noise.domain.size());
            let shape = Shape(shape);
            let table: Vec<Value> = v
                .func
                .outputs
                .iter()
                .enumerate()
                .map(|(flat, &o)| {
                    let mut idx = shape.unflat(flat);
                    let noise_idx = idx.pop().expect("noise axis");
                    let parents: Vec<Value> = idx
                        .iter()
                        .zip(&v.func.parents)
                        .map(|(&j, p)| {
                            let i = model.index_of(p).expect("validated parent");
                            Value::String(model.var(i).domain.labels()[j].clone())
                        })
                        .collect();
                    json!({
                        "parents": parents,
                        "noise": v.noise.domain.labels()[noise_idx],
                        "out": v.domain.labels()[o],
                    })
                })
                .collect();
            json!({
                "name": v.name,
                "domain": v.domain.labels(),
                "parents": v.func.parents,
                "noise": {
                    "domain": v.noise.domain.labels(),
                    "pmf": v.noise.pmf.iter().map(prob_value).collect::<Vec<_>>(),
                },
                "table": table,
                "observed": v.observed,
                "role": v.role.map(role_name),
            })
        })
        .collect();
    json!({ "variables": variables })
}

/// Render a JSON value with stable key order (object keys sorted).
pub fn to_canonical_string(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON serialization cannot fail")
}
