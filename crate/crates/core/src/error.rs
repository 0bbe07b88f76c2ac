use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("{op} is not supported in dimension {n}")]
    UnsupportedDimension { op: &'static str, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("vector {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("matrix is not unimodular (det = {det})")]
    NotUnimodular { det: i128 },
    #[error("polytope has affine dimension {affine_dim} < {dim}")]
    NotFullDimensional { dim: usize, affine_dim: usize },
    #[error("direction is not a unit vector (norm {norm})")]
    NonUnitDirection { norm: f64 },
    #[error("coordinate {index} of the evaluation point is zero")]
    ZeroCoordinate { index: usize },
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("support is not contained in a line b + Z*{0:?}")]
    NotOnLine(Vec<i64>),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("face polynomial of f{index} in direction {v:?} is zero")]
    ZeroFacePolynomial { index: usize, v: Vec<i64> },
    #[error("directional resultant in direction {v:?} vanishes (log|Res| = {log_abs})")]
    VanishingResultant { v: Vec<i64>, log_abs: f64 },
    #[error("elimination polynomial interpolation failed: {0}")]
    InterpolationFailure(String),
    #[error("Bernstein count mismatch: found degree {found}, mixed volume {expected}")]
    BernsteinMismatch { found: u64, expected: u64 },
    #[error("mixed volume {0} is below 1")]
    DegenerateMixedVolume(String),
    #[error("root iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("cycle is empty")]
    EmptyCycle,
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("theta {0} outside (0, 1]")]
    ThetaOutOfRange(f64),
    #[error("eta must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("extreme coefficient vanishes")]
    VanishingExtremeCoefficient,
    #[error("window violates beta - alpha + 2 tau < 2 pi")]
    PeriodicityViolated,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("support of f{index} is not contained in {d} * simplex + {shift:?}")]
    ContainmentViolated { index: usize, d: i64, shift: Vec<i64> },
    #[error("all {attempts} trials rejected at kappa = {kappa}")]
    AllTrialsRejected { kappa: u32, attempts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("distance estimation failed: {0}")]
    DistanceEstimation(String),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse { pos: e.column(), msg: e.to_string() }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
