use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoordError {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("delta must be non-negative, got {0}")]
    NegativeDelta(f64),
    #[error("degenerate axis partition: {0}")]
    DegeneratePartition(String),
    #[error("enumeration guard exceeded: {size} > {limit}")]
    GuardExceeded { size: u128, limit: u128 },
    #[error("message set of {size} entries exceeds table cap {cap}")]
    TableCap { size: u128, cap: u128 },
    #[error("factored index overflow: {0}")]
    IndexOverflow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CoordError>;
