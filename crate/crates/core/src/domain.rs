//! Shared vocabulary: lift identity, operating modes, telemetry events and query scopes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::DomainError;
use crate::site::SiteConfig;
use crate::time::Timestamp;

/// A lift, identified by building code and unit number. Wire form `B8-1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiftId {
    building: String,
    unit: u32,
}

impl LiftId {
    pub fn new(building: impl Into<String>, unit: u32) -> Result<Self, DomainError> {
        let building = building.into();
        if unit == 0 || !valid_building_code(&building) {
            return Err(DomainError::InvalidLiftId(format!("{building}-{unit}")));
        }
        Ok(LiftId { building, unit })
    }

    pub fn building(&self) -> &str {
        &self.building
    }

    pub fn unit(&self) -> u32 {
        self.unit
    }
}

pub(crate) fn valid_building_code(code: &str) -> bool {
    !code.is_empty() && code.len() <= 16 && code.chars().all(|c| c.is_ascii_alphanumeric())
}

impl fmt::Display for LiftId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.building, self.unit)
    }
}

impl FromStr for LiftId {
    type Err = DomainError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DomainError::InvalidLiftId(s.to_string());
        let (building, unit) = s.rsplit_once('-').ok_or_else(bad)?;
        let unit: u32 = unit.parse().map_err(|_| bad())?;
        LiftId::new(building, unit).map_err(|_| bad())
    }
}

impl Serialize for LiftId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LiftId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! wire_enum {
    ($(#[$m:meta])* $name:ident, $kind:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = DomainError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(DomainError::UnknownVariant { kind: $kind, value: other.to_string() }),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

wire_enum!(
    /// Operating state of a lift. `Normal` is the only working mode.
    OperationMode, "operation mode" {
        Normal => "normal",
        OutOfService => "out_of_service",
        NoCommunication => "no_communication",
        InMaintenance => "in_maintenance",
    }
);

impl OperationMode {
    /// Stable numeric id used in the event log.
    pub fn id(self) -> u8 {
        match self {
            OperationMode::Normal => 0,
            OperationMode::OutOfService => 1,
            OperationMode::NoCommunication => 2,
            OperationMode::InMaintenance => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn is_working(self) -> bool {
        self == OperationMode::Normal
    }

    /// Human-readable label as shown on the notice board.
    pub fn label(self) -> &'static str {
        match self {
            OperationMode::Normal => "working",
            OperationMode::OutOfService => "out of service",
            OperationMode::NoCommunication => "no communication",
            OperationMode::InMaintenance => "in maintenance",
        }
    }
}

wire_enum!(
    Direction, "direction" {
        Up => "up",
        Down => "down",
        None => "none",
    }
);

impl Direction {
    /// Travel direction from one level to another; `None` when they are equal.
    pub fn between(from: i32, to: i32) -> Direction {
        match to.cmp(&from) {
            std::cmp::Ordering::Greater => Direction::Up,
            std::cmp::Ordering::Less => Direction::Down,
            std::cmp::Ordering::Equal => Direction::None,
        }
    }
}

wire_enum!(
    EventType, "event type" {
        HallCallRegistered => "hall_call_registered",
        HallCallServed => "hall_call_served",
        CarArrival => "car_arrival",
        DoorOpen => "door_open",
        DoorClose => "door_close",
        ModeChange => "mode_change",
        Emergency => "emergency",
        Heartbeat => "heartbeat",
    }
);

impl EventType {
    pub fn is_hall_call(self) -> bool {
        matches!(self, EventType::HallCallRegistered | EventType::HallCallServed)
    }
}

wire_enum!(
    DoorStatus, "door status" {
        Open => "open",
        Closed => "closed",
        Opening => "opening",
        Closing => "closing",
    }
);

/// Unvalidated field tuple for a telemetry record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent {
    pub lift: LiftId,
    pub occurred_at: Timestamp,
    pub direction: Direction,
    pub wait_time_s: Option<u32>,
    pub operation_mode: OperationMode,
    pub event_type: EventType,
    pub floor_position: i32,
    pub door_status: DoorStatus,
}

/// One validated telemetry record from a lift data logger.
///
/// Only obtainable through [`validate_event`], so every instance satisfies the
/// site-dependent invariants of the site it was validated against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiftEvent {
    lift: LiftId,
    occurred_at: Timestamp,
    direction: Direction,
    wait_time_s: Option<u32>,
    operation_mode: OperationMode,
    event_type: EventType,
    floor_position: i32,
    door_status: DoorStatus,
}

impl LiftEvent {
    pub fn lift(&self) -> &LiftId {
        &self.lift
    }
    pub fn occurred_at(&self) -> Timestamp {
        self.occurred_at
    }
    pub fn direction(&self) -> Direction {
        self.direction
    }
    pub fn wait_time_s(&self) -> Option<u32> {
        self.wait_time_s
    }
    pub fn operation_mode(&self) -> OperationMode {
        self.operation_mode
    }
    pub fn event_type(&self) -> EventType {
        self.event_type
    }
    pub fn floor_position(&self) -> i32 {
        self.floor_position
    }
    pub fn door_status(&self) -> DoorStatus {
        self.door_status
    }

    pub fn to_raw(&self) -> RawEvent {
        RawEvent {
            lift: self.lift.clone(),
            occurred_at: self.occurred_at,
            direction: self.direction,
            wait_time_s: self.wait_time_s,
            operation_mode: self.operation_mode,
            event_type: self.event_type,
            floor_position: self.floor_position,
            door_status: self.door_status,
        }
    }
}

/// Checks a candidate record against every event invariant for `site`.
pub fn validate_event(raw: RawEvent, site: &SiteConfig) -> Result<LiftEvent, DomainError> {
    let building = site
        .building(raw.lift.building())
        .filter(|_| site.lift(&raw.lift).is_some())
        .ok_or_else(|| DomainError::UnknownLift(raw.lift.to_string()))?;
    if !building.has_level(raw.floor_position) {
        return Err(DomainError::LevelOutOfRange {
            building: building.code.clone(),
            level: raw.floor_position,
        });
    }
    match (raw.event_type, raw.wait_time_s) {
        (EventType::HallCallServed, None) => return Err(DomainError::MissingWaitTime(raw.lift)),
        (other, Some(_)) if other != EventType::HallCallServed => {
            return Err(DomainError::UnexpectedWaitTime { lift: raw.lift, event_type: other.as_str() })
        }
        _ => {}
    }
    if raw.event_type.is_hall_call() && raw.direction == Direction::None {
        return Err(DomainError::MissingDirection(raw.lift));
    }
    Ok(LiftEvent {
        lift: raw.lift,
        occurred_at: raw.occurred_at,
        direction: raw.direction,
        wait_time_s: raw.wait_time_s,
        operation_mode: raw.operation_mode,
        event_type: raw.event_type,
        floor_position: raw.floor_position,
        door_status: raw.door_status,
    })
}

/// Which lifts a query covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryScope {
    SingleLift(LiftId),
    Building(String),
    AllLifts,
}

impl QueryScope {
    /// Builds a scope, rejecting references to lifts or buildings absent from `site`.
    pub fn checked(self, site: &SiteConfig) -> Result<Self, DomainError> {
        match &self {
            QueryScope::SingleLift(id) if site.lift(id).is_none() => {
                Err(DomainError::UnknownLift(id.to_string()))
            }
            QueryScope::Building(code) if site.building(code).is_none() => {
                Err(DomainError::UnknownBuilding(code.clone()))
            }
            _ => Ok(self),
        }
    }

    pub fn covers(&self, lift: &LiftId) -> bool {
        match self {
            QueryScope::SingleLift(id) => id == lift,
            QueryScope::Building(code) => lift.building() == code,
            QueryScope::AllLifts => true,
        }
    }
}

impl fmt::Display for QueryScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryScope::SingleLift(id) => write!(f, "lift {id}"),
            QueryScope::Building(code) => write!(f, "building {code}"),
            QueryScope::AllLifts => f.write_str("all lifts"),
        }
    }
}

impl Serialize for QueryScope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(1))?;
        match self {
            QueryScope::SingleLift(id) => m.serialize_entry("lift", id)?,
            QueryScope::Building(code) => m.serialize_entry("building", code)?,
            QueryScope::AllLifts => m.serialize_entry("all_lifts", &true)?,
        }
        m.end()
    }
}
