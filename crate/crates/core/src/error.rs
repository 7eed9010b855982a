use thiserror::Error;

use crate::domain::LiftId;
use crate::time::Timestamp;

/// Rejections raised while constructing or validating domain values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("unknown lift {0}")]
    UnknownLift(String),
    #[error("unknown building {0}")]
    UnknownBuilding(String),
    #[error("level {level} is outside the range of building {building}")]
    LevelOutOfRange { building: String, level: i32 },
    #[error("hall-call-served event for {0} carries no wait time")]
    MissingWaitTime(LiftId),
    #[error("{event_type} event for {lift} carries a wait time")]
    UnexpectedWaitTime { lift: LiftId, event_type: &'static str },
    #[error("hall-call event for {0} has no direction")]
    MissingDirection(LiftId),
    #[error("invalid lift id {0:?}, expected <building>-<unit>")]
    InvalidLiftId(String),
    #[error("invalid timestamp {0:?}")]
    BadTimestamp(String),
    #[error("window start {start} is not before end {end}")]
    EmptyWindow { start: Timestamp, end: Timestamp },
    #[error("unknown {kind} {value:?}")]
    UnknownVariant { kind: &'static str, value: String },
}

impl DomainError {
    /// Stable machine-readable code for wire responses.
    pub fn code(&self) -> &'static str {
        match self {
            DomainError::UnknownLift(_) => "unknown_lift",
            DomainError::UnknownBuilding(_) => "unknown_building",
            DomainError::LevelOutOfRange { .. } => "level_out_of_range",
            DomainError::MissingWaitTime(_) => "missing_wait_time",
            DomainError::UnexpectedWaitTime { .. } => "unexpected_wait_time",
            DomainError::MissingDirection(_) => "missing_direction",
            DomainError::InvalidLiftId(_) => "invalid_lift_id",
            DomainError::BadTimestamp(_) => "bad_timestamp",
            DomainError::EmptyWindow { .. } => "invalid_window",
            DomainError::UnknownVariant { .. } => "unknown_variant",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt record in {table} at line {line}: {reason}")]
    Corrupt { table: &'static str, line: usize, reason: String },
}
