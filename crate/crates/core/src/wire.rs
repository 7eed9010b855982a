//! The JSON-lines event format shared by the store, the simulator and logger frames.
//!
//! One object per line, fields in this order:
//! `lift_id`, `occurred_time`, `direction`, `wait_time`, `operation_mode_id`,
//! `event_type`, `floor_position`, `door_status`. `wait_time` is `null` unless the
//! event is a served hall call.

use serde::{Deserialize, Serialize};

use crate::domain::{Direction, DoorStatus, EventType, LiftEvent, LiftId, OperationMode, RawEvent};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireEvent {
    pub lift_id: LiftId,
    pub occurred_time: Timestamp,
    pub direction: Direction,
    #[serde(default)]
    pub wait_time: Option<u32>,
    pub operation_mode_id: u8,
    pub event_type: EventType,
    pub floor_position: i32,
    pub door_status: DoorStatus,
}

impl From<&LiftEvent> for WireEvent {
    fn from(ev: &LiftEvent) -> Self {
        WireEvent {
            lift_id: ev.lift().clone(),
            occurred_time: ev.occurred_at(),
            direction: ev.direction(),
            wait_time: ev.wait_time_s(),
            operation_mode_id: ev.operation_mode().id(),
            event_type: ev.event_type(),
            floor_position: ev.floor_position(),
            door_status: ev.door_status(),
        }
    }
}

/// Canonical single-line encoding, without the trailing newline.
pub fn encode_event(ev: &LiftEvent) -> String {
    serde_json::to_string(&WireEvent::from(ev)).expect("event serialisation cannot fail")
}

/// Parses one line into an unvalidated record. Site checks are left to
/// [`crate::domain::validate_event`].
pub fn decode_event(line: &str) -> Result<RawEvent, String> {
    let wire: WireEvent = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let operation_mode = OperationMode::from_id(wire.operation_mode_id)
        .ok_or_else(|| format!("unknown operation_mode_id {}", wire.operation_mode_id))?;
    Ok(RawEvent {
        lift: wire.lift_id,
        occurred_at: wire.occurred_time,
        direction: wire.direction,
        wait_time_s: wire.wait_time,
        operation_mode,
        event_type: wire.event_type,
        floor_position: wire.floor_position,
        door_status: wire.door_status,
    })
}

/// Lines that carry no event: blank lines and `#` comment headers.
pub fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}
