use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid subsystem selection: {0}")]
    InvalidSelection(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (minimum eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("eigendecomposition did not converge")]
    EigenFailed,

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("POVM elements do not sum to the identity (deviation {0:.3e})")]
    PovmIncomplete(f64),

    #[error("operator spectrum outside [0, 1]: {0}")]
    SpectrumOutOfRange(String),

    #[error("map is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("map is not trace non-increasing (excess {0:.3e})")]
    NotTraceReducing(f64),

    #[error("matrix is not an isometry (deviation {0:.3e})")]
    NotIsometry(f64),

    #[error("channel arity mismatch: {0}")]
    Arity(String),

    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("degrading map not certified (margin {0:.3e})")]
    NotDegradable(f64),

    #[error("channel is not a {0}")]
    WrongFamily(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed `{field}`: {message}")]
    Format { field: String, message: String },
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }
}
