use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("value outside enumerated spectral range: {0}")]
    OutOfRange(String),

    #[error("not a spectral level: {0}")]
    NotALevel(String),

    #[error("quadrature grid too coarse: {nodes} nodes for trigonometric degree {degree}")]
    GridTooCoarse { nodes: usize, degree: usize },

    #[error("tolerance unattainable: {0}")]
    Tolerance(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidParameter(msg.into()))
}
