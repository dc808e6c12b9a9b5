use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate segment (length within tolerance)")]
    DegenerateSegment,
    #[error("invalid edge length {0}: must satisfy 0 < e < 1")]
    InvalidEdgeLength(f64),
    #[error("frequency must be positive, got {0}")]
    NonpositiveFrequency(f64),
    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(u32, u32),
    #[error("zero-area face {0}")]
    ZeroAreaFace(usize),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("protocol cannot be met within the simplification budget: {0}")]
    ProtocolUnsatisfiable(String),
    #[error("face {face} has two edges within b of boundary point {point}")]
    ConflictingDeletion { face: usize, point: usize },
    #[error("protocol violation at face {face}: {reason}")]
    ProtocolViolation { face: usize, reason: String },
    #[error("no template for configuration {0}")]
    UnknownConfiguration(String),
    #[error("template references unbound label {0}")]
    MissingVertexBinding(String),
    #[error("instantiated face is not counter-clockwise (face {0})")]
    OrientationFailure(usize),
    #[error("stitch mismatch: {0}")]
    StitchMismatch(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("degenerate face {0} (area <= 0)")]
    DegenerateFace(usize),
    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
