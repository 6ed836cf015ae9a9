use std::path::PathBuf;

/// Errors produced by the cagewarp library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    ObjParse { line: usize, msg: String },
    #[error("non-triangular face at line {line}")]
    NonTriangularFace { line: usize },
    #[error("face index {index} out of range at line {line} ({count} vertices)")]
    IndexOutOfRange { line: usize, index: i64, count: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("mesh is not watertight")]
    NotWatertight,
    #[error("cage pair mismatch: {0}")]
    CageMismatch(String),
    #[error("interpolation parameter t = {0} is outside [0, 1]")]
    InvalidInterpolation(f64),
    #[error("point too close to cage surface")]
    NearSurface,
    #[error("point too close to cage surface: it lies outside the cage")]
    OutsideCage,
    #[error("empty occupancy")]
    EmptyOccupancy,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("harmonic solve did not converge after {sweeps} sweeps (max change {max_change:e})")]
    NonConvergence { sweeps: usize, max_change: f64 },
    #[error("weight count mismatch: expected {expected}, got {got}")]
    WeightMismatch { expected: usize, got: usize },
    #[error("harmonic coordinates have no closed form; precise evaluation is unavailable")]
    PreciseHarmonic,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0:?}")]
    UnsupportedVersion(String),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("direction is not unit length (norm {0})")]
    UnnormalizedDirection(f64),
    #[error("non-finite radiance sample at ({x}, {y}, {z})")]
    NonFiniteSample { x: f64, y: f64, z: f64 },
    #[error("{}: {error}", path.display())]
    File { path: PathBuf, error: Box<Error> },
    #[error("image encoding: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches the path of the file being read or written.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            error: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
