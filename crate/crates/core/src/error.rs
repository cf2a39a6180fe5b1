use crate::C64;
use thiserror::Error;

/// Errors raised by the library. Inconclusive numerical outcomes are *not*
/// errors; they are reported through [`crate::Verdict::Inconclusive`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unbounded diagonal: {0}")]
    UnboundedDiagonal(String),

    #[error("zero perturbation vector: {0}")]
    ZeroVector(String),

    #[error("rule-generated sequence `{0}` has no tail majorant")]
    MissingMajorant(String),

    #[error("pole: z = {z} coincides with diagonal entry {location}")]
    Pole { location: String, z: C64 },

    #[error("eigenvalue {eigenvalue} lies within {distance:e} of the contour")]
    EigenvalueOnCurve { eigenvalue: C64, distance: f64 },

    #[error("shifted diagonal entry {index} vanishes (xi0 lies on the diagonal)")]
    ShiftInDiagonal { index: usize },

    #[error("no rotation separates the shifted diagonal from the branch cut (best margin {margin:e} at entry {index})")]
    NoRotation { margin: f64, index: usize },

    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
