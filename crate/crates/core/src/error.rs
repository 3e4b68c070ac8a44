use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading or writing a voxel image.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("file not found: {0}")]
    Missing(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header {path}: {message}")]
    Header { path: PathBuf, message: String },
    #[error("unsupported dtype {0:?} (only \"f32\" is supported)")]
    Dtype(String),
    #[error("payload holds {actual} bytes, header declares {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("voxel spacing must be strictly positive, got {0:?}")]
    NonPositiveSpacing([f64; 3]),
    #[error("grid dimensions must be positive, got {0:?}")]
    EmptyDims([usize; 3]),
    #[error("non-finite intensity at voxel {0}")]
    NonFinite(usize),
}

/// Mesh-level failures: degenerate geometry or broken connectivity.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} of surface {surface} is degenerate (area {area:e})")]
    DegenerateFace { surface: usize, face: usize, area: f64 },
    #[error("vertex {0} is not referenced by any face")]
    IsolatedVertex(usize),
    #[error("weighted normal vanishes at vertex {0}")]
    DegenerateNormal(usize),
    #[error("mesh is not closed ({0} free edges)")]
    Open(usize),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("invalid seed parameters: {0}")]
    SeedParams(String),
}

/// Failures of the region labelling and force evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("region {0} contains no voxels")]
    EmptyRegion(usize),
    #[error("inconsistent region topology: {0}")]
    Inconsistent(String),
}

/// Failures of assembly and the linear solve.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("assumption (A) violated on surface {surface}: {reason}")]
    Assumption { surface: usize, reason: String },
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("system matrix is not positive definite (curvature {0:e} along a search direction)")]
    NotPositiveDefinite(f64),
    #[error("time step fell below {tau_min:e} without meeting the displacement bounds")]
    Stagnation { tau_min: f64 },
    #[error("invalid parameter: {0}")]
    Param(String),
}

/// Reasons a topology surgery is abandoned; the input surfaces stay untouched.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurgeryError {
    #[error("expected {expected} after deletion, found {found}")]
    ComponentCount { expected: &'static str, found: usize },
    #[error("expected two free-edge loops, found {0}")]
    LoopCount(usize),
    #[error("boundary is not a simple cycle")]
    NonSimpleLoop,
    #[error("loops could not be matched within {0} insertions")]
    Matching(usize),
    #[error("cannot merge surfaces with different region pairs {0:?} and {1:?}")]
    RegionMismatch((usize, usize), (usize, usize)),
    #[error("result is not a closed 2-manifold: {0}")]
    NotManifold(String),
    #[error("event does not apply: {0}")]
    NotApplicable(String),
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Surgery(#[from] SurgeryError),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
