//! Core of the vertical-transport operations platform: lift telemetry
//! vocabulary, the append-only event store, ingestion with a silence
//! watchdog, live status with notifications, portal analytics, multi-modal
//! route planning, and a deterministic fleet simulator.

pub mod analytics;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod planner;
pub mod simulator;
pub mod site;
pub mod status;
pub mod store;
pub mod time;
pub mod wire;

pub use domain::{Direction, DoorStatus, EventType, LiftEvent, LiftId, OperationMode, QueryScope, RawEvent};
pub use error::{DomainError, StoreError};
pub use site::{Location, SiteConfig};
pub use time::{TimeWindow, Timestamp};
