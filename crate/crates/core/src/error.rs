use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("undefined operation: {0}")]
    UndefinedOperation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid site: {0}")]
    InvalidSite(String),
    #[error("syndrome parity error: {0} defects and no boundary to absorb the odd one")]
    Parity(usize),
    #[error("residual chain is not closed: {0}")]
    OpenResidual(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("no threshold: p = {p} is not below p_c = {p_c}")]
    NoThreshold { p: f64, p_c: f64 },
    #[error("matching failed: {0}")]
    Matching(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
