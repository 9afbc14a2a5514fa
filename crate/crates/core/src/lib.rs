pub mod clock;
pub mod config;
pub mod error;
pub mod forecast;
pub mod horizon;
pub mod indicators;
pub mod market_data;
pub mod ml;
pub mod news;
pub mod recommend;
pub mod report;
pub mod service;
pub mod text;

pub use error::{Error, Result};
