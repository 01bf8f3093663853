use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (angle range,
    /// coupling coefficient, dimension mismatch, empty region).
    #[error("domain error: {0}")]
    Domain(String),

    /// A beam specification is internally inconsistent.
    #[error("invalid beam spec: {0}")]
    Spec(String),

    #[error("config error: {0}")]
    Config(String),

    /// A pattern measurement could not be taken (no half-power crossing,
    /// empty side-lobe intersection).
    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
