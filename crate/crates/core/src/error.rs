use thiserror::Error;

/// Errors produced by the engine. Variant names follow the operation
/// contracts so callers (and the C API) can map them to stable codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("OHLC invariant violated at t={0}")]
    OhlcInvariantViolated(i64),
    #[error("timestamps are not strictly increasing on the resolution grid (at t={0})")]
    NonMonotonicTimestamps(i64),
    #[error("gap in candle grid before t={0}")]
    GapInSeries(i64),
    #[error("insufficient history: needed {needed}, available {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("storage unavailable: {0}")]
    StorageUnavailable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular linear system")]
    SingularSystem,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("model used before fitting")]
    UnfittedModel,
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("forecast horizons or timestamps do not align")]
    HorizonMismatch,
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("actual close must be positive, got {0}")]
    NonPositiveActual(f64),
    #[error("unknown template '{0}'")]
    MissingTemplate(String),
    #[error("provider unavailable ({track}): {reason}")]
    ProviderUnavailable { track: String, reason: String },

    #[error("signal component '{0}' outside [0, 1]")]
    ComponentOutOfRange(&'static str),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("missing partial report from agent {0}")]
    MissingPartial(String),

    #[error("missing field '{0}'")]
    MissingField(String),
    #[error("news item {0} has no extracted entities")]
    UnannotatedItem(String),
    #[error("unknown seed entity '{0}'")]
    UnknownSeed(String),

    #[error("unknown category '{0}'")]
    UnknownCategory(String),
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("failed to bind {addr}: {reason}")]
    BindFailure { addr: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable, upper-snake identifier used on the wire and across the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRow { .. } => "MALFORMED_ROW",
            Error::OhlcInvariantViolated(_) => "OHLC_INVARIANT_VIOLATED",
            Error::NonMonotonicTimestamps(_) => "NON_MONOTONIC_TIMESTAMPS",
            Error::GapInSeries(_) => "GAP_IN_SERIES",
            Error::InsufficientHistory { .. } => "INSUFFICIENT_HISTORY",
            Error::StorageUnavailable(_) => "STORAGE_UNAVAILABLE",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::SingularSystem => "SINGULAR_SYSTEM",
            Error::EmptyDataset => "EMPTY_DATASET",
            Error::UnfittedModel => "UNFITTED_MODEL",
            Error::TooFewSamples(_) => "TOO_FEW_SAMPLES",
            Error::LengthMismatch { .. } => "LENGTH_MISMATCH",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::HorizonMismatch => "HORIZON_MISMATCH",
            Error::AlphaOutOfRange(_) => "ALPHA_OUT_OF_RANGE",
            Error::NonPositiveActual(_) => "NON_POSITIVE_ACTUAL",
            Error::MissingTemplate(_) => "MISSING_TEMPLATE",
            Error::ProviderUnavailable { .. } => "PROVIDER_UNAVAILABLE",
            Error::ComponentOutOfRange(_) => "COMPONENT_OUT_OF_RANGE",
            Error::MissingInput(_) => "MISSING_INPUT",
            Error::MissingPartial(_) => "MISSING_PARTIAL",
            Error::MissingField(_) => "MISSING_FIELD",
            Error::UnannotatedItem(_) => "UNANNOTATED_ITEM",
            Error::UnknownSeed(_) => "UNKNOWN_SEED",
            Error::UnknownCategory(_) => "UNKNOWN_CATEGORY",
            Error::UnknownSymbol(_) => "UNKNOWN_SYMBOL",
            Error::ConfigInvalid(_) => "CONFIG_INVALID",
            Error::BindFailure { .. } => "BIND_FAILURE",
            Error::Io(_) => "IO",
            Error::Json(_) => "JSON",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
