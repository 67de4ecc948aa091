use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label `{0}` appears on both operands")]
    LabelCollision(String),
    #[error("unknown wire label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate wire label `{0}`")]
    DuplicateLabel(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not square over a single system")]
    NotSquare,
    #[error("permutation is not a bijection on the wire labels")]
    InvalidPermutation,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("channel is not CPTP")]
    NotCptp,
    #[error("Kraus set is empty")]
    EmptyKraus,
    #[error("party partition does not cover the channel wires")]
    BadPartition,
    #[error("affine basis bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("channel is signalling (residual {0:.3e})")]
    Signalling(f64),
    #[error("affine basis does not reproduce the channel (residual {0:.3e})")]
    InsufficientBasis(f64),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("map is not invariant under the idempotents (residual {0:.3e})")]
    InvarianceViolated(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("search exhausted; families tried: {0:?}")]
    SearchExhausted(Vec<String>),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
