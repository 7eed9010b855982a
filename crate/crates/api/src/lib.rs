//! HTTP JSON service over the core modules: public status, notices, display
//! panel estimates and route planning; logger ingestion; authorised analytics,
//! event logs and manual mode changes; sessions and sign-in history.

pub mod auth;
pub mod config;
pub mod error;
pub mod routes;
pub mod service;

pub use auth::{Clock, ManualClock, Role, SystemClock, UserAccount, UserDirectory};
pub use config::ServiceConfig;
pub use error::ApiError;
pub use service::{serve, serve_on, AppState, Parts, ServeError, Services};
