use thiserror::Error;

/// Errors produced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("complexity guard tripped at node(s) {nodes:?}: {reason}")]
    ComplexityGuard { nodes: Vec<usize>, reason: String },

    #[error("path count overflow at node {node}")]
    Overflow { node: usize },

    #[error("matrix is not symmetric at ({i}, {j}): {forward} != {backward}")]
    Asymmetric {
        i: usize,
        j: usize,
        forward: u64,
        backward: u64,
    },

    #[error("eigensolver did not converge in {iterations} iterations (residuals {residuals:?})")]
    NonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("enumeration refused: n = {n} exceeds cap {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("{0}")]
    Usage(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// 0 success, 2 usage, 3 numerical, 4 complexity guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ComplexityGuard { .. } | Error::EnumerationCap { .. } | Error::Overflow { .. } => 4,
            Error::NonConvergence { .. } | Error::Asymmetric { .. } | Error::ZeroVector => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
