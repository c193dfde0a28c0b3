use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("cell {cell} is inverted (signed volume {volume:e})")]
    InvertedElement { cell: usize, volume: f64 },

    #[error("cell {cell} is degenerate (volume {volume:e})")]
    DegenerateElement { cell: usize, volume: f64 },

    #[error(
        "periodic pair {pair} references vertex {vertex}, but the mesh has {n_vertices} vertices"
    )]
    DanglingPeriodicPair {
        pair: usize,
        vertex: usize,
        n_vertices: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("step failed: {0}")]
    StepFailure(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
