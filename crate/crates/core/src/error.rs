use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tail bound unavailable: r = {r} times ratio bound {ratio} is not below 1")]
    TailUnbounded { r: f64, ratio: f64 },
    #[error("no ratio cap supplied for a custom sequence; kernel evaluation needs one")]
    MissingRatioCap,
    #[error("coefficient a_{degree} vanishes")]
    ZeroWeight { degree: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kernel value vanishes within tolerance")]
    KernelZero,
    #[error("automorphism has a pole at the given point")]
    PoleAtPoint,
    #[error("point of norm {norm} lies outside the domain")]
    OutsideDomain { norm: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("subspace piece {index} has dimension {dim}, expected a line")]
    PieceDimension { index: usize, dim: usize },
    #[error("linear map sends a sampled point of the source variety off the target variety (residual {residual:e})")]
    VarietyMismatch { residual: f64 },
    #[error("invalid coefficient sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
}
