//! Exact identification-verification engine for discrete structural causal
//! models.
//!
//! The engine represents finite-domain NPSEMs (nonparametric structural
//! equation models with independent errors), evaluates counterfactual worlds
//! by recursive substitution over enumerated noise configurations, computes
//! mediation and longitudinal causal parameters together with their
//! observed-data functionals, tests model-class membership numerically, and
//! searches for counterexamples to identification claims.
//!
//! Arithmetic is dual-mode: `f64` for tolerance-based checks and exact
//! rationals (`num_rational::BigRational`) for identification verdicts on
//! small models. Every operation is a pure function of immutable inputs.

pub mod builder;
pub mod error;
pub mod identification;
pub mod longitudinal;
pub mod mediation;
pub mod num;
pub mod pmf;
pub mod scm;
pub mod spec_io;
pub mod table;
pub mod witness;

pub use error::{EngineError, Result};
pub use num::Scalar;
pub use pmf::{conditional_independent, IndependenceVerdict, JointPmf, PmfVar};
pub use scm::{
    validate_model, CausalModelSpec, Domain, NoiseSpec, Regime, Role, Rule, StructuralFunction,
    ValidatedModel, Variable, WorldQuery,
};

/// Fixed published default seed for reproducible runs.
pub const DEFAULT_SEED: u64 = 20240 + 1013;
