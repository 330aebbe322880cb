use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Validation,
    Compile,
    Verify,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cell {cell} is unbounded")]
    UnboundedCell { cell: usize },

    #[error("cell {cell} has empty interior (inradius {radius:e})")]
    EmptyInterior { cell: usize, radius: f64 },

    #[error("cell {cell} is degenerate: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("facet normals of cell {cell} do not have full row rank")]
    RankDeficient { cell: usize },

    #[error("no positive normal combination exists for cell {cell}")]
    NoPositiveCombination { cell: usize },

    #[error("epsilon too large: {0}")]
    EpsilonTooLarge(String),

    #[error("point lies outside the mesh")]
    OutsideMesh,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Rewrites the cell index carried by cell-level errors.
    pub fn at_cell(self, index: usize) -> Self {
        match self {
            Error::UnboundedCell { .. } => Error::UnboundedCell { cell: index },
            Error::EmptyInterior { radius, .. } => Error::EmptyInterior { cell: index, radius },
            Error::DegenerateCell { reason, .. } => Error::DegenerateCell { cell: index, reason },
            Error::RankDeficient { .. } => Error::RankDeficient { cell: index },
            Error::NoPositiveCombination { .. } => Error::NoPositiveCombination { cell: index },
            other => other,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) | Error::Io(_) => ErrorClass::Parse,
            Error::UnboundedCell { .. }
            | Error::EmptyInterior { .. }
            | Error::DegenerateCell { .. }
            | Error::InvalidMesh(_)
            | Error::InvalidFunction(_)
            | Error::InvalidNetwork(_)
            | Error::DimensionMismatch { .. }
            | Error::OutsideMesh => ErrorClass::Validation,
            Error::Verification(_) => ErrorClass::Verify,
            Error::InvalidArgument(_)
            | Error::RankDeficient { .. }
            | Error::NoPositiveCombination { .. }
            | Error::EpsilonTooLarge(_)
            | Error::Lp(_)
            | Error::Internal(_) => ErrorClass::Compile,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
