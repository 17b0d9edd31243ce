use thiserror::Error;

/// Errors produced by the clustering engine.
#[derive(Debug, Error)]
pub enum DpcError {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    /// Malformed input data; `line` is the 0-based data line.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown object id {0}")]
    UnknownId(usize),

    #[error("no centers selected")]
    NoCenters,

    #[error("global peak {0} has no higher-density neighbor and must be selected as a center")]
    PeakNotCenter(usize),

    #[error("clusterings cover different object sets ({left} vs {right} objects)")]
    UniverseMismatch { left: usize, right: usize },

    #[error("invalid index file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DpcError {
    /// True for errors caused by bad caller input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            DpcError::InvalidParameter(_)
                | DpcError::DimensionMismatch { .. }
                | DpcError::EmptyDataset
                | DpcError::UnknownId(_)
                | DpcError::NoCenters
                | DpcError::PeakNotCenter(_)
                | DpcError::UniverseMismatch { .. }
        )
    }
}

pub type Result<T, E = DpcError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> DpcError {
    DpcError::InvalidParameter(msg.into())
}
