//! OHLCV ingestion, windowing and prediction archives.

mod candle;
mod ingest;
mod store;
mod window;

pub use candle::{Candle, CandleSeries, PredictionRecord, Resolution, Timestamp, Track};
pub use ingest::{ingest_candles, parse_timestamp, CandleFormat, IngestOptions};
pub use store::{
    load_predictions, store_prediction, table_name, CandleStore, FilePredictionStore, MemoryPredictionStore,
    PredictionStore, RecordId, PREDICTION_SCHEMA_VERSION,
};
pub use window::{tail, window};
