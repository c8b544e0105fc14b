use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("mismatched radicands: {0} vs {1}")]
    MismatchedRadicand(u64, u64),
    #[error("radicand {0} is not a square-free integer >= 2")]
    InvalidRadicand(u64),
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("negative mass for outcome `{0}`")]
    NegativeMass(String),
    #[error("duplicate outcome identifier `{0}`")]
    DuplicateOutcome(String),
    #[error("masses sum to {got}, expected 1")]
    MassSum { got: String },
    #[error("space has no positive-mass outcome")]
    AllNull,
    #[error("unknown outcome identifier `{0}`")]
    UnknownOutcome(String),
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("event or partition does not cover the space's positive outcomes")]
    BadPartition(String),
    #[error("density must be strictly positive on positive-mass outcomes (outcome `{0}`)")]
    NonEquivalentDensity(String),
    #[error("density does not renormalize to 1 (integral {got})")]
    DensityNotNormalized { got: String },
    #[error("exponent must satisfy 1 <= p (got {0})")]
    InvalidExponent(String),
    #[error("exponent pair requires q <= p (got p={p}, q={q})")]
    ExponentOrder { p: String, q: String },
    #[error("enumeration budget exceeded: needs {needed} cases, budget {budget}; pass --approx or raise SIGMA_LAB_BUDGET")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("window is empty or out of range")]
    EmptyWindow,
    #[error("structural hypothesis of the witness kind is violated: {0}")]
    HypothesisViolated(String),
    #[error("conditional-independence family must be nonempty")]
    EmptyFamily,
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("unknown fuzz check `{0}`")]
    UnknownCheck(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("undecided comparison at maximum precision (values coincide to {0} digits)")]
    Undecided(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
