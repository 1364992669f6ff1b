use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("treatment column contains non-binary value {value} at row {row}")]
    NonBinaryTreatment { row: usize, value: f64 },

    #[error("no {arm} units in the data")]
    EmptyArm { arm: &'static str },

    #[error("non-finite value in column '{column}' at row {row}")]
    NonFiniteValue { column: String, row: usize },

    #[error("duplicate covariate name '{0}'")]
    DuplicateName(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("learner family {family} cannot be used as a {task}")]
    UnsupportedFamily { family: &'static str, task: &'static str },

    #[error("clipping eps must lie in (0, 0.5), got {0}")]
    InvalidEps(f64),

    #[error("invalid fold count {folds} for n = {n}")]
    InvalidFoldCount { n: usize, folds: usize },

    #[error("training complement of fold {fold} has no {arm} units")]
    EmptyArmInFold { fold: usize, arm: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no finite robustness value: the confounding scale is zero but the estimate differs from H0")]
    NoFiniteRv,

    #[error("unknown variable '{0}'")]
    UnknownVariable(String),

    #[error("short model has no covariates left after dropping the benchmark set")]
    DegenerateShortModel,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
