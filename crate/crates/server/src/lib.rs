//! HTTP API over [`triagebase`] projects.
//!
//! [`router`] builds the axum application from an [`AppState`]; the
//! `triagebase` binary wraps it with a command line.

pub mod api;
pub mod auth;
pub mod config;
pub mod error;
pub mod paging;
pub mod state;

pub use api::router;
pub use config::Config;
pub use state::AppState;
