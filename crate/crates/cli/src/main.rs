//! Command-line entry point: load a model-spec file, run evaluations,
//! membership checks, identification verifications, counterexample searches
//! and slippage audits, and emit human or machine-readable reports.
//!
//! Exit codes: 0 computed / claim holds on the sample; 1 claim refuted
//! (witness emitted); 2 input or spec error; 3 positivity / zero-mass abort.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use causal_ident_core::error::EngineError;
use causal_ident_core::identification::{
    audit_slippage, class_m1, class_m2, find_counterexample, verify_identification, AuditConfig,
    FunctionalSelector, ModelClassSpec, ParameterSelector,
};
use causal_ident_core::longitudinal::{check_b, Phi};
use causal_ident_core::mediation::{check_m1, check_m2, MembershipReport};
use causal_ident_core::num::Scalar;
use causal_ident_core::spec_io::{model_to_json, parse_spec, to_canonical_string, SpecFile};
use causal_ident_core::DEFAULT_SEED;

#[derive(Parser)]
#[command(
    name = "causal-ident",
    version,
    about = "Exact identification verification for discrete structural causal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Float,
    Rational,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Args)]
struct CommonOpts {
    /// Arithmetic mode; rational mode is exact and supported by eval/check
    #[arg(long, value_enum, default_value = "float")]
    mode: Mode,
    /// Report format
    #[arg(long, value_enum, default_value = "human")]
    output: Output,
    /// Deterministic seed (a fixed published constant by default)
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a causal parameter or observed-data functional on the model
    Eval {
        spec: PathBuf,
        /// Causal parameter (gamma_ate, gamma_nde, gamma_nie, gamma_rde,
        /// gamma_rie, gamma_rde_w, gamma_total, gamma_cmn, gamma_mtp,
        /// gamma_mtp_si_g1, gamma_mtp_si)
        #[arg(long)]
        param: Option<String>,
        /// Observed-data functional (psi_cmn, psi_mediation, psi_rde,
        /// psi_rde_w, psi_g)
        #[arg(long)]
        psi: Option<String>,
        /// Named regime from the spec file (required by the MTP family and psi_g)
        #[arg(long)]
        regime: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check model-class membership or the longitudinal B-conditions
    Check {
        spec: PathBuf,
        /// Class name from meta.classes (or builtin m1 / m2)
        #[arg(long)]
        class: Option<String>,
        /// Check B1.2–B1.4 instead of a class
        #[arg(long)]
        b_conditions: bool,
        /// Named regime for the B1.2 positivity leg
        #[arg(long)]
        regime: Option<String>,
        /// Membership tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Verify an identification claim over sampled class members
    Ident {
        spec: PathBuf,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        regime: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Search the class for a model maximizing |gamma - psi|
    Counterexample {
        spec: PathBuf,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        psi: String,
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        /// Gap above which the claim counts as refuted
        #[arg(long, default_value_t = 0.01)]
        gap_floor: f64,
        #[arg(long)]
        regime: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Audit the four structural slippage conditions
    Audit {
        spec: PathBuf,
        /// Comma-separated class pair `m1,m2` (outer class first)
        #[arg(long)]
        class: String,
        /// Comma-separated parameter pair `gamma1,gamma2`
        #[arg(long)]
        gamma: String,
        /// Comma-separated functional pair `psi1,psi2`
        #[arg(long)]
        psi: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 50_000)]
        budget: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0.01)]
        gap_floor: f64,
        #[arg(long)]
        regime: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Render a previously saved machine-readable record for humans
    Report { record: PathBuf },
}

struct Failure {
    code: i32,
    message: String,
}

fn engine_failure(e: EngineError) -> Failure {
    let code = match e {
        EngineError::ZeroMassEvent(_) | EngineError::PositivityViolation { .. } => 3,
        _ => 2,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_spec<P: Scalar>(path: &PathBuf) -> Result<SpecFile<P>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_failure(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(engine_failure)
}

fn named_regime<'a, P: Scalar>(
    spec: &'a SpecFile<P>,
    name: Option<&str>,
    needed_by: &str,
) -> Result<&'a causal_ident_core::scm::Regime<P>, Failure> {
    let name = name.ok_or_else(|| input_failure(format!("{needed_by} requires --regime")))?;
    spec.regimes
        .get(name)
        .ok_or_else(|| input_failure(format!("regime `{name}` not defined in the spec file")))
}

fn mediation_frame<P: Scalar>(
    spec: &SpecFile<P>,
) -> Result<causal_ident_core::mediation::MediationFrame, Failure> {
    spec.mediation_frame
        .clone()
        .ok_or_else(|| input_failure("spec file declares no meta.mediation_frame"))
}

fn longitudinal_frame<P: Scalar>(
    spec: &SpecFile<P>,
) -> Result<causal_ident_core::longitudinal::LongitudinalFrame, Failure> {
    spec.longitudinal_frame
        .clone()
        .ok_or_else(|| input_failure("spec file declares no meta.longitudinal_frame"))
}

fn param_selector<P: Scalar>(
    name: &str,
    spec: &SpecFile<P>,
    regime: Option<&str>,
) -> Result<ParameterSelector<P>, Failure> {
    let med = |f: fn(causal_ident_core::mediation::MediationFrame) -> ParameterSelector<P>| {
        mediation_frame(spec).map(f)
    };
    match name {
        "gamma_ate" => med(ParameterSelector::Ate),
        "gamma_nde" => med(ParameterSelector::Nde),
        "gamma_nie" => med(ParameterSelector::Nie),
        "gamma_rde" => med(ParameterSelector::Rde),
        "gamma_rie" => med(ParameterSelector::Rie),
        "gamma_rde_w" => med(ParameterSelector::RdeW),
        "gamma_total" => med(ParameterSelector::InterventionalTotal),
        "gamma_cmn" => med(ParameterSelector::Cmn),
        "gamma_mtp" => Ok(ParameterSelector::Mtp {
            frame: longitudinal_frame(spec)?,
            regime: named_regime(spec, regime, name)?.clone(),
        }),
        "gamma_mtp_si_g1" => Ok(ParameterSelector::MtpSiG1 {
            frame: longitudinal_frame(spec)?,
            regime: named_regime(spec, regime, name)?.clone(),
            phi: Phi::RegimePushforward,
        }),
        "gamma_mtp_si" => Ok(ParameterSelector::MtpSi {
            frame: longitudinal_frame(spec)?,
            regime: named_regime(spec, regime, name)?.clone(),
            phi: Phi::RegimePushforward,
        }),
        other => Err(input_failure(format!("unknown parameter `{other}`"))),
    }
}

fn functional_selector<P: Scalar>(
    name: &str,
    spec: &SpecFile<P>,
    regime: Option<&str>,
) -> Result<FunctionalSelector<P>, Failure> {
    match name {
        "psi_cmn" => Ok(FunctionalSelector::Cmn(mediation_frame(spec)?)),
        "psi_mediation" => Ok(FunctionalSelector::Mediation(mediation_frame(spec)?)),
        "psi_rde" => Ok(FunctionalSelector::Rde(mediation_frame(spec)?)),
        "psi_rde_w" => Ok(FunctionalSelector::RdeW(mediation_frame(spec)?)),
        "psi_g" => Ok(FunctionalSelector::GFormula {
            frame: longitudinal_frame(spec)?,
            regime: named_regime(spec, regime, name)?.clone(),
        }),
        // parameters are admitted on the functional side for
        // parameter-vs-parameter claims
        other if other.starts_with("gamma_") => Ok(FunctionalSelector::CausalParam(Box::new(
            param_selector(other, spec, regime)?,
        ))),
        other => Err(input_failure(format!("unknown functional `{other}`"))),
    }
}

fn class_by_name(spec: &SpecFile<f64>, name: &str, tol: f64) -> Result<ModelClassSpec, Failure> {
    if let Some(c) = spec.classes.get(name) {
        return Ok(c.clone());
    }
    match name {
        "m1" => Ok(class_m1(tol)),
        "m2" => Ok(class_m2(tol)),
        other => Err(input_failure(format!("class `{other}` not defined in the spec file"))),
    }
}

fn scalar_value<P: Scalar>(v: &P) -> Value {
    json!({ "value": v.to_f64(), "literal": v.to_literal() })
}

fn membership_json(report: &MembershipReport) -> Value {
    json!({
        "class": report.class,
        "holds": report.holds,
        "conditions": report.conditions.iter().map(|c| json!({
            "name": c.name,
            "holds": c.holds,
            "max_deviation": c.max_deviation,
            "skipped_strata": c.skipped_strata,
        })).collect::<Vec<_>>(),
    })
}

fn membership_warnings(report: &MembershipReport, warnings: &mut Vec<String>) {
    for c in &report.conditions {
        if c.skipped_strata > 0 {
            warnings.push(format!(
                "{}: {} zero-mass strata skipped",
                c.name, c.skipped_strata
            ));
        }
    }
}

struct Outcome {
    /// Result payload; fully determined by (spec, command, seed).
    payload: Value,
    warnings: Vec<String>,
    /// 0 computed / holds, 1 refuted.
    code: i32,
}

fn run_eval<P: Scalar>(
    spec_path: &PathBuf,
    param: Option<&str>,
    psi: Option<&str>,
    regime: Option<&str>,
) -> Result<Outcome, Failure> {
    let spec: SpecFile<P> = load_spec(spec_path)?;
    let (claim, value) = match (param, psi) {
        (Some(p), None) => {
            let sel = param_selector(p, &spec, regime)?;
            (sel.name(), sel.evaluate(&spec.model).map_err(engine_failure)?)
        }
        (None, Some(f)) => {
            let sel = functional_selector(f, &spec, regime)?;
            (sel.name(), sel.evaluate(&spec.model).map_err(engine_failure)?)
        }
        _ => return Err(input_failure("eval takes exactly one of --param / --psi")),
    };
    Ok(Outcome {
        payload: json!({ "claim": claim, "result": scalar_value(&value) }),
        warnings: vec![],
        code: 0,
    })
}

fn run_check<P: Scalar>(
    spec_path: &PathBuf,
    class: Option<&str>,
    b_conditions: bool,
    regime: Option<&str>,
    tol: f64,
) -> Result<Outcome, Failure> {
    let spec: SpecFile<P> = load_spec(spec_path)?;
    if b_conditions {
        let frame = longitudinal_frame(&spec)?;
        let reg = match regime {
            Some(name) => named_regime(&spec, Some(name), "b-conditions")?.clone(),
            None => causal_ident_core::scm::Regime::empty(),
        };
        let report = check_b(&spec.model, &frame, &reg, tol).map_err(engine_failure)?;
        let payload = json!({
            "claim": "b-conditions",
            "result": {
                "holds": report.holds(),
                "b12": { "holds": report.b12.holds, "violations": report.b12_violations },
                "b13": { "holds": report.b13.holds, "max_deviation": report.b13.max_deviation },
                "b14": { "holds": report.b14.holds, "max_deviation": report.b14.max_deviation },
                "z_set": report.zsets.z,
                "s_set": report.zsets.s,
            },
        });
        return Ok(Outcome {
            code: i32::from(!report.holds()),
            payload,
            warnings: vec![],
        });
    }
    let class = class.ok_or_else(|| input_failure("check takes --class or --b-conditions"))?;
    let frame = mediation_frame(&spec)?;
    let report = match class {
        "m1" => check_m1(&spec.model, &frame, tol),
        "m2" => check_m2(&spec.model, &frame, tol),
        other => {
            return Err(input_failure(format!(
                "membership checks support classes m1 and m2, got `{other}`"
            )))
        }
    }
    .map_err(engine_failure)?;
    let mut warnings = vec![];
    membership_warnings(&report, &mut warnings);
    Ok(Outcome {
        code: i32::from(!report.holds),
        payload: json!({ "claim": format!("membership:{class}"), "result": membership_json(&report) }),
        warnings,
    })
}

fn split_pair<'a>(s: &'a str, flag: &str) -> Result<(&'a str, &'a str), Failure> {
    s.split_once(',')
        .ok_or_else(|| input_failure(format!("{flag} takes a comma-separated pair")))
}

fn audit_json(report: &causal_ident_core::identification::AuditReport) -> Value {
    json!({
        "holds": report.all_hold,
        "seed": report.seed,
        "note": report.note,
        "conditions": report.conditions.iter().map(|c| json!({
            "name": c.name,
            "holds": c.holds,
            "detail": c.detail,
            "gap": c.gap,
            "witness_model": c.witness.as_ref().map(model_to_json),
        })).collect::<Vec<_>>(),
    })
}

fn run(cli: Cli) -> Result<(Outcome, CommonOpts), Failure> {
    match cli.command {
        Command::Eval {
            spec,
            param,
            psi,
            regime,
            common,
        } => {
            let outcome = match common.mode {
                Mode::Float => run_eval::<f64>(&spec, param.as_deref(), psi.as_deref(), regime.as_deref()),
                Mode::Rational => {
                    run_eval::<BigRational>(&spec, param.as_deref(), psi.as_deref(), regime.as_deref())
                }
            }?;
            Ok((outcome, common))
        }
        Command::Check {
            spec,
            class,
            b_conditions,
            regime,
            tol,
            common,
        } => {
            let outcome = match common.mode {
                Mode::Float => {
                    run_check::<f64>(&spec, class.as_deref(), b_conditions, regime.as_deref(), tol)
                }
                Mode::Rational => run_check::<BigRational>(
                    &spec,
                    class.as_deref(),
                    b_conditions,
                    regime.as_deref(),
                    tol,
                ),
            }?;
            Ok((outcome, common))
        }
        Command::Ident {
            spec,
            gamma,
            psi,
            class,
            n,
            tol,
            regime,
            common,
        } => {
            if common.mode == Mode::Rational {
                return Err(input_failure("sampled verification runs in float mode"));
            }
            let file: SpecFile<f64> = load_spec(&spec)?;
            let g = param_selector(&gamma, &file, regime.as_deref())?;
            let p = functional_selector(&psi, &file, regime.as_deref())?;
            let c = class_by_name(&file, &class, tol)?;
            let report =
                verify_identification(&g, &p, &c, n, tol, common.seed).map_err(engine_failure)?;
            let payload = json!({
                "claim": format!("{} identified by {}", g.name(), p.name()),
                "class": c.name,
                "n": report.n,
                "tol": tol,
                "result": {
                    "holds": report.holds_on_sample,
                    "max_gap": report.max_gap,
                    "worst_seed": report.worst_seed,
                    "witness_model": if report.holds_on_sample {
                        Value::Null
                    } else {
                        report.worst_model.as_ref().map(model_to_json).unwrap_or(Value::Null)
                    },
                },
            });
            Ok((
                Outcome {
                    code: i32::from(!report.holds_on_sample),
                    payload,
                    warnings: vec![],
                },
                common,
            ))
        }
        Command::Counterexample {
            spec,
            gamma,
            psi,
            class,
            budget,
            gap_floor,
            regime,
            common,
        } => {
            if common.mode == Mode::Rational {
                return Err(input_failure("counterexample search runs in float mode"));
            }
            let file: SpecFile<f64> = load_spec(&spec)?;
            let g = param_selector(&gamma, &file, regime.as_deref())?;
            let p = functional_selector(&psi, &file, regime.as_deref())?;
            let c = class_by_name(&file, &class, 1e-9)?;
            let out = find_counterexample(&g, &p, &c, budget, common.seed, Some(2.0 * gap_floor))
                .map_err(engine_failure)?;
            let refuted = out.gap >= gap_floor;
            let payload = json!({
                "claim": format!("{} identified by {}", g.name(), p.name()),
                "class": c.name,
                "budget": budget,
                "result": {
                    "refuted": refuted,
                    "gap": out.gap,
                    "evaluations": out.evaluations,
                    "witness_model": if refuted { model_to_json(&out.model) } else { Value::Null },
                },
            });
            Ok((
                Outcome {
                    code: i32::from(refuted),
                    payload,
                    warnings: vec![],
                },
                common,
            ))
        }
        Command::Audit {
            spec,
            class,
            gamma,
            psi,
            n,
            budget,
            tol,
            gap_floor,
            regime,
            common,
        } => {
            if common.mode == Mode::Rational {
                return Err(input_failure("slippage audits run in float mode"));
            }
            let file: SpecFile<f64> = load_spec(&spec)?;
            let (c1, c2) = split_pair(&class, "--class")?;
            let (g1, g2) = split_pair(&gamma, "--gamma")?;
            let (p1, p2) = split_pair(&psi, "--psi")?;
            let m1 = class_by_name(&file, c1, tol)?;
            let m2 = class_by_name(&file, c2, tol)?;
            let g1 = param_selector(g1, &file, regime.as_deref())?;
            let g2 = param_selector(g2, &file, regime.as_deref())?;
            let p1 = functional_selector(p1, &file, regime.as_deref())?;
            let p2 = functional_selector(p2, &file, regime.as_deref())?;
            let config = AuditConfig {
                n,
                budget,
                tol,
                gap_floor,
                seed: common.seed,
                early_stop: None,
            };
            let report =
                audit_slippage(&m1, &m2, &g1, &g2, &p1, &p2, &config).map_err(engine_failure)?;
            let payload = json!({
                "claim": format!(
                    "slippage({}, {}; {} vs {}, {} vs {})",
                    m1.name, m2.name, g1.name(), g2.name(), p1.name(), p2.name()
                ),
                "n": n,
                "budget": budget,
                "tol": tol,
                "result": audit_json(&report),
            });
            Ok((
                Outcome {
                    code: i32::from(!report.all_hold),
                    payload,
                    warnings: vec![],
                },
                common,
            ))
        }
        Command::Report { record } => {
            let text = std::fs::read_to_string(&record)
                .map_err(|e| input_failure(format!("cannot read {}: {e}", record.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| input_failure(format!("record is not valid JSON: {e}")))?;
            println!("{}", render_human(&value));
            std::process::exit(0);
        }
    }
}

fn render_condition_table(conditions: &[Value]) -> String {
    let mut out = String::new();
    let width = conditions
        .iter()
        .filter_map(|c| c["name"].as_str().map(str::len))
        .max()
        .unwrap_or(4)
        .max(4);
    out.push_str(&format!("  {:<width$}  {:<8}  detail\n", "name", "verdict"));
    for c in conditions {
        let name = c["name"].as_str().unwrap_or("?");
        let holds = if c["holds"].as_bool().unwrap_or(false) {
            "pass"
        } else {
            "FAIL"
        };
        let detail = c["detail"]
            .as_str()
            .map(str::to_string)
            .unwrap_or_else(|| {
                let dev = &c["max_deviation"];
                if dev.is_null() {
                    String::new()
                } else {
                    format!("max deviation {dev}")
                }
            });
        let evidence = if c["witness_model"].is_object() {
            " [witness model attached]"
        } else {
            ""
        };
        out.push_str(&format!("  {name:<width$}  {holds:<8}  {detail}{evidence}\n"));
    }
    out
}

fn render_human(record: &Value) -> String {
    let mut out = String::new();
    for key in ["claim", "class", "n", "budget", "tol", "seed", "engine_version"] {
        if !record[key].is_null() {
            out.push_str(&format!("{key:>16}: {}\n", record[key]));
        }
    }
    if let Some(ms) = record["wall_time_ms"].as_u64() {
        out.push_str(&format!("{:>16}: {ms} ms\n", "wall time"));
    }
    let result = &record["result"];
    if let Some(conds) = result["conditions"].as_array() {
        out.push_str("conditions:\n");
        out.push_str(&render_condition_table(conds));
    }
    for key in [
        "value",
        "literal",
        "holds",
        "refuted",
        "gap",
        "max_gap",
        "evaluations",
        "note",
    ] {
        let v = if result[key].is_null() {
            &result["result"][key]
        } else {
            &result[key]
        };
        if !v.is_null() {
            out.push_str(&format!("{key:>16}: {v}\n"));
        }
    }
    if result["witness_model"].is_object() || result["result"]["witness_model"].is_object() {
        out.push_str("   witness_model: attached (see machine output)\n");
    }
    if let Some(warnings) = record["warnings"].as_array() {
        for w in warnings {
            out.push_str(&format!("         warning: {w}\n"));
        }
    }
    out
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli) {
        Ok((outcome, common)) => {
            let mut record = json!({
                "command": argv[1..].join(" "),
                "engine_version": env!("CARGO_PKG_VERSION"),
                "seed": common.seed,
                "warnings": outcome.warnings,
            });
            for (k, v) in outcome.payload.as_object().cloned().unwrap_or_default() {
                record[k] = v;
            }
            match common.output {
                Output::Json => println!("{}", to_canonical_string(&record)),
                Output::Human => {
                    // wall time is human-only so machine output stays
                    // byte-deterministic
                    record["wall_time_ms"] = json!(start.elapsed().as_millis() as u64);
                    print!("{}", render_human(&record));
                }
            }
            std::process::exit(outcome.code);
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}
