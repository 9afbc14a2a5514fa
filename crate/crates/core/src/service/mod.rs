//! Engine facade shared by the CLI and the JSON API, the HTTP server, and
//! mock remote providers.

mod engine;
mod http;
mod mock;

pub use engine::{
    ChatReply, ChatRequest, ChatRoute, CoinInfo, DataLayout, Engine, FeedKind, FeedbackAck, FeedbackRequest, KlineRange, ReplayReport,
};
pub use http::{router, serve, ApiError};
pub use mock::{mock_router, serve_mock};
