use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
///
/// Variants are grouped by the stage that raises them; the CLI maps
/// [`Error::kind`] to its exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    ObjParse { path: String, line: usize, msg: String },

    #[error("{path}:{line}: face is not a triangle ({corners} corners)")]
    NonTriangleFace { path: String, line: usize, corners: usize },

    #[error("{path}:{line}: face corner {corner} has no uv index (expected v/vt)")]
    MissingUv { path: String, line: usize, corner: usize },

    #[error("{path}:{line}: index {index} out of range ({what} count {count})")]
    IndexOutOfRange { path: String, line: usize, what: &'static str, index: isize, count: usize },

    #[error("uv coordinate {value} at index {index} outside [0,1]")]
    UvOutOfRange { index: usize, value: f64 },

    #[error("edge ({v0},{v1}) shared by {count} faces (non-manifold)")]
    NonManifoldEdge { v0: usize, v1: usize, count: usize },

    #[error("face {face} is degenerate (zero area)")]
    DegenerateFace { face: usize },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("{what}: expected {expected}, got {got}")]
    SizeMismatch { what: &'static str, expected: String, got: String },

    #[error("uv domain is empty (no texel center falls inside any uv triangle)")]
    EmptyDomain,

    #[error("mesh has {vertices} vertices, fewer than downsample factor {factor}")]
    TooFewVertices { vertices: usize, factor: usize },

    #[error("landmark \"{name}\" not present in template")]
    UnknownLandmark { name: String },

    #[error("no landmarks provided")]
    EmptyLandmarks,

    #[error("target silhouette is empty")]
    EmptyTargetSilhouette,

    #[error("both views required: missing {view} view")]
    MissingView { view: &'static str },

    #[error("thin-plate system is singular (controls collinear or duplicated)")]
    SingularSystem,

    #[error("need at least {needed} control points, got {got}")]
    InsufficientControls { needed: usize, got: usize },

    #[error("optimization diverged at step {step} (non-finite energy)")]
    Divergence { step: usize },

    #[error("unknown texture recipe \"{name}\"")]
    UnknownRecipe { name: String },

    #[error("unknown template \"{name}\"")]
    UnknownTemplate { name: String },

    #[error("hole mask marks texels outside the uv domain")]
    HoleOutsideDomain,

    #[error("config error: {msg}")]
    Config { msg: String },

    #[error("invalid image {path}: {msg}")]
    BadImage { path: String, msg: String },

    #[error("invalid json {path}: {msg}")]
    BadJson { path: String, msg: String },

    #[error("dataset at {path} is empty or malformed: {msg}")]
    BadDataset { path: String, msg: String },
}

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable, unparsable, or inconsistent input data.
    BadInput,
    /// Numerical failure during optimization or a linear solve.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::SingularSystem | Error::Divergence { .. } => ErrorKind::Numerical,
            _ => ErrorKind::BadInput,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
