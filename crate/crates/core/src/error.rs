use thiserror::Error;

/// Errors surfaced by model validation, world evaluation and functionals.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EngineError {
    #[error("cyclic dependency involving variable `{0}`")]
    CyclicGraph(String),
    #[error("structural function table for `{0}` is missing entries")]
    IncompleteTable(String),
    #[error("invalid pmf for `{0}`: {1}")]
    InvalidPmf(String, String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("noise assignment missing for `{0}`")]
    MissingNoise(String),
    #[error("randomizer draw missing for stochastic rule on `{0}`")]
    MissingRandomizer(String),
    #[error("conditioning event has zero mass: {0}")]
    ZeroMassEvent(String),
    #[error("variable sets overlap in independence query")]
    OverlappingSets,
    #[error("label `{0}` not in domain of `{1}`")]
    UnknownLabel(String, String),
    #[error("label `{0}` is not numeric; expectations need numeric labels")]
    NonNumericLabel(String),
    #[error("model generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("positivity violation at interval {interval}: history {history}")]
    PositivityViolation { interval: usize, history: String },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("spec error at {pointer}: {message}")]
    Spec { pointer: String, message: String },
}

pub type Result<T> = std::result::Result<T, EngineError>;
