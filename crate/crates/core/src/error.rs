use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("representation mismatch: expected {expected}, found {found}")]
    RepMismatch { expected: &'static str, found: &'static str },
    #[error("dilation factor {0} is not a power of two")]
    NotPowerOfTwo(f64),
    #[error("dilated lattice does not align with the grid: {0}")]
    LatticeMisalignment(String),
    #[error("frequency support exceeds the resolved range: {0}")]
    SupportOutOfRange(String),
    #[error("shear is not resolved on the grid: {0}")]
    UnresolvedShear(String),
    #[error("littlewood-paley range too small: {0}")]
    LpRange(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exponent out of range: {0}")]
    ExponentRange(String),
    #[error("source is not compactly supported in time: {0}")]
    NotTimeCompact(String),
    #[error("time grid too coarse or not uniform: {0}")]
    TimeGrid(String),
    #[error("empty sample")]
    EmptySample,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
