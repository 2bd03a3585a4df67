use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("law parameter out of domain: {0}")]
    InvalidLaw(String),

    #[error("invalid environment: {0}")]
    InvalidEnv(String),

    #[error("environment is not subcritical: E[X] = {mean_x}")]
    NotSubcritical { mean_x: f64 },

    #[error("subcritical type outside the supported decay cases: {0}")]
    OutOfScope(String),

    #[error("law has zero mean; truncated second moment is undefined")]
    ZeroMean,

    #[error("initial law undefined: state {state} has no immigration (G(0) = 1)")]
    NoImmigration { state: usize },

    #[error("enumeration needs {needed} sequences, budget is {budget}; use the Monte Carlo kernel")]
    BudgetExceeded { needed: f64, budget: f64 },

    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: u64, got: u64 },

    #[error("kernel series too short: need {needed} entries, have {available}")]
    MissingKernelEntries { needed: usize, available: usize },

    #[error("root certificate undecided: {reason}")]
    Undecided { reason: String, required_n: Option<usize> },

    #[error("{0}")]
    Domain(String),

    #[error("population overflow in generation {generation}")]
    Overflow { generation: u64 },

    #[error("walk is not mean-zero under this environment: E[X] = {mean_x}")]
    NotMeanZero { mean_x: f64 },
}
