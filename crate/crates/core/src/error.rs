use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph file parse error: {0}")]
    Parse(String),

    #[error("asymmetric weights on edge ({i}, {j}): {forward} vs {backward}")]
    AsymmetricWeights {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },

    #[error("vertex {vertex} has nonpositive measure {value}")]
    NonPositiveMeasure { vertex: usize, value: f64 },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("vertex {0} has no incident edge")]
    IsolatedVertex(usize),

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge { i: usize, j: usize, reason: String },

    #[error("unknown vertex {vertex} (graph has {vertex_count} vertices)")]
    UnknownVertex { vertex: usize, vertex_count: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite field value at vertex {0}")]
    NonFinite(usize),

    #[error("degenerate volume-growth fit: {0}")]
    DegenerateFit(String),

    #[error("graph has {vertices} vertices, above the dense eigensolver cap {cap}")]
    SizeOverCap { vertices: usize, cap: usize },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("series truncation insufficient: bound {bound:e} exceeds tolerance {tolerance:e}")]
    TruncationInsufficient { bound: f64, tolerance: f64 },

    #[error("curvature precondition failed at vertex {vertex}: {reason}")]
    CurvaturePrecondition { vertex: usize, reason: String },

    #[error("negative state value {value} at vertex {vertex}")]
    NegativeState { vertex: usize, value: f64 },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("empty sample range: {0}")]
    EmptySampleRange(String),

    #[error("Picard iteration diverged after {iterations} iterations (norms {norms:?})")]
    Divergence { iterations: usize, norms: Vec<f64> },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Coarse category used by front ends to map failures onto exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter(_) | Error::EmptySampleRange(_) => ErrorCategory::InvalidParameter,
            Error::Parse(_) => ErrorCategory::Parse,
            Error::AsymmetricWeights { .. }
            | Error::NonPositiveMeasure { .. }
            | Error::Disconnected { .. }
            | Error::IsolatedVertex(_)
            | Error::InvalidEdge { .. } => ErrorCategory::GraphValidation,
            Error::UnknownVertex { .. }
            | Error::LengthMismatch { .. }
            | Error::NonFinite(_)
            | Error::NegativeState { .. }
            | Error::Mismatch(_)
            | Error::CurvaturePrecondition { .. } => ErrorCategory::InvalidInput,
            Error::DegenerateFit(_)
            | Error::SizeOverCap { .. }
            | Error::Eigensolver(_)
            | Error::TruncationInsufficient { .. }
            | Error::Singular(_) => ErrorCategory::Numerical,
            Error::Divergence { .. } => ErrorCategory::Divergence,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    InvalidParameter,
    Parse,
    GraphValidation,
    InvalidInput,
    Numerical,
    Divergence,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::InvalidParameter => "invalid-parameter",
            ErrorCategory::Parse => "parse",
            ErrorCategory::GraphValidation => "graph-validation",
            ErrorCategory::InvalidInput => "invalid-input",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Divergence => "divergence",
            ErrorCategory::Io => "io",
        }
    }
}
