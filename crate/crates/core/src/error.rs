use thiserror::Error;

/// Errors raised across the rule chemistry, geometry, and harness layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("s-expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("pattern variable `?{0}` is not bound")]
    UnboundVariable(String),

    #[error("fact `{0}` is not ground")]
    NotGround(String),

    #[error("malformed rule: {0}")]
    MalformedRule(String),

    #[error("no rewrite rule matches the current state")]
    NoApplicableRule,

    #[error("observed distribution is undefined: empty history with zero smoothing")]
    UndefinedDistribution,

    #[error("divergence is infinite: outcome `{0}` observed but predicted with probability 0")]
    InfiniteDivergence(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("natural-gradient step rejected: {0}")]
    StepRejected(String),

    #[error("loss evaluation failed: {0}")]
    Loss(String),

    #[error("no discriminating fact separates the positives from the counterexample")]
    NoDiscriminator,

    #[error("causal rule cannot be lowered into a rewrite rule: {0}")]
    NotLowerable(String),

    #[error("environment episode is already done; call reset first")]
    EpisodeDone,

    #[error("action `{0}` is not legal in this environment")]
    IllegalAction(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
