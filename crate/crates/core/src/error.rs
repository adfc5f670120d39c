use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate space label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown space label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("map is not completely positive and trace preserving: {0}")]
    NotCptp(String),
    #[error("invalid partial order: {0}")]
    InvalidOrder(String),
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("scenario too large: {0}")]
    TooLarge(String),
    #[error("wrong number of labs: expected {expected}, got {got}")]
    LabCount { expected: usize, got: usize },
    #[error("channels do not commute (max deviation {0:e})")]
    NonCommuting(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("operation `{0}` is not invertible")]
    NotInvertible(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("verdict does not exhibit causal order")]
    NoCausalOrder,
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
