use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} is outside the supported range (|n| < 2^126)")]
    OutOfRange(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u128),
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements belong to different quadratic fields (D0 = {0} vs {1})")]
    MixedField(i64, i64),
    #[error("root extraction undecided for q = {q} at maximum precision")]
    Undecided { q: u64 },
    #[error("coefficient a1 and a2 must be nonzero")]
    ZeroCoefficient,
    #[error("square discriminant: delta = {0} is a perfect square")]
    SquareDiscriminant(i128),
    #[error("gamma is a root of unity (delta = {0})")]
    RootOfUnity(i128),
    #[error("prime {0} divides 2*a2*delta and is excluded")]
    ExcludedPrime(u64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint digest mismatch: file has {found}, config has {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
