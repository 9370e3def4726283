//! File-backed HTTP service and CLI around `pacepath-core`.

pub mod app;
pub mod config;
pub mod http;
pub mod schemas;
pub mod store;

pub use app::{ApiError, App};
pub use config::Config;
