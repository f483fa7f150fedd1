use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector norm {0:e} is too small to define a line")]
    ZeroVector(f64),
    #[error("matrix is singular or ill-conditioned (condition number {0:e})")]
    SingularMatrix(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exactly one side of the cohomological identity has a vanishing bracket")]
    DegeneratePair,
    #[error("signature p = {p} is out of range for d = {d}")]
    BadSignature { p: usize, d: usize },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("only {count} exceedance events at k = {k} (need at least {required})")]
    InsufficientCounts { k: usize, count: u64, required: u64 },
    #[error("asymptotic standard deviation must be positive (got {0})")]
    DegenerateSigma(f64),
    #[error("no spectral gap: |lambda2|/|lambda1| = {0}")]
    NoGap(f64),
    #[error("{mass:.4} of the eigenmeasure sits where the bracket vanishes")]
    SingularBracket { mass: f64 },
    #[error("quadrature needs {needed} nodes, budget is {budget}")]
    UnresolvedPhase { needed: usize, budget: usize },
    #[error("every offset candidate collides with an atom")]
    NoValidOffset,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
