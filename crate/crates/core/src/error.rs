use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("over-trimmed: no bands left after trimming")]
    OverTrimmed,

    #[error("grid error: {0}")]
    Grid(String),

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("feature count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("undefined RMD at band {band} ({wavelength_nm} nm): non-infected mean is zero")]
    UndefinedRmd { band: usize, wavelength_nm: f64 },

    #[error("balancing shortfall: {candidates} candidate plants within one SD, {needed} needed ({shortfall} short)")]
    BalanceShortfall {
        candidates: usize,
        needed: usize,
        shortfall: usize,
    },

    #[error("temperature records: {0}")]
    Temperature(String),

    #[error("degenerate prior: training labels are all one class")]
    DegeneratePrior,

    #[error("fold degenerate; reduce k: {0}")]
    FoldDegenerate(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("no model above floor: {0}")]
    NoModelSelected(String),

    #[error("single class: {0}")]
    SingleClass(String),

    #[error("synthetic config: {0}")]
    SynthConfig(String),

    #[error("csv row {row}: {message}")]
    CsvRow { row: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
