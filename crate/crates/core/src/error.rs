use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("non-finite matrix")]
    NonFinite,
    #[error("polar factor not unique")]
    PolarNotUnique,
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("matrix not PSD")]
    NotPsd { eigenvalue: f64 },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("empty matrix")]
    Empty,
    #[error("decomposition did not converge")]
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EbnmError {
    #[error("observation and variance lengths differ ({x} vs {s2})")]
    LengthMismatch { x: usize, s2: usize },
    #[error("noise variance must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error("empty observation vector")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ebnm(#[from] EbnmError),
    #[error("rank {k} exceeds min(N, P) = {max}")]
    RankTooLarge { k: usize, max: usize },
    #[error("penalty has {found} lambdas but K = {k}")]
    PenaltyLength { k: usize, found: usize },
    #[error("penalty lambdas must be finite and nonnegative")]
    BadLambda,
    #[error("degenerate exact fit")]
    DegenerateExactFit,
    #[error("the Gram-matrix form requires the number of observations N")]
    MissingN,
    #[error("invalid option: {0}")]
    InvalidOption(String),
}
