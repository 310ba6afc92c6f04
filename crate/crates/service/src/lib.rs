//! HTTP API and command-line front end over `icutl-core`.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod state;

pub use api::router;
pub use config::ServiceConfig;
pub use error::{ApiError, CliError};
pub use state::{AppState, ModelRegistry};
