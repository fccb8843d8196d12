use thiserror::Error;

use crate::dqlinalg::EigenPair;

/// Errors raised by the algebra, solver and registration layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-appreciable value: {0} has zero standard part")]
    NonAppreciable(&'static str),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("rotation axis is not unit length (|axis| = {0})")]
    NonUnitAxis(f64),

    #[error("quaternion is not unit length (|q| = {0})")]
    NonUnitQuaternion(f64),

    #[error("cannot invert the zero quaternion")]
    ZeroQuaternion,

    #[error("cannot normalize the zero dual quaternion")]
    ZeroInput,

    #[error("pose rotation is not a unit quaternion (|q| = {0})")]
    NonUnitRotation(f64),

    #[error("dual quaternion violates the unit condition (|st| - 1 = {norm_defect:e}, sc(st du*) = {orth_defect:e})")]
    NotUnit { norm_defect: f64, orth_defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("power iteration produced an iterate with non-appreciable norm at step {0}")]
    NonAppreciableNorm(usize),

    #[error("power iteration did not reach the residual tolerance within {} iterations (residual {:e})", .0.iterations, .0.residual)]
    MaxItersExceeded(Box<EigenPair>),

    #[error("initial iterate is not entrywise unit (entry {0})")]
    InfeasibleStart(usize),

    #[error("degenerate alignment: inner product has zero standard part")]
    DegenerateAlignment,

    #[error("degenerate gauge: rotation sum norm {0:e} below threshold")]
    DegenerateGauge(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),

    #[error("unsupported PLY format: {0}")]
    UnsupportedFormat(String),

    #[error("PLY body truncated: {0}")]
    TruncatedBody(String),

    #[error("degenerate correspondences: {0}")]
    DegenerateCorrespondences(&'static str),

    #[error("measurement graph is disconnected ({accepted} of {total} pairs accepted)")]
    InsufficientGraph { accepted: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
