//! Portal statistics over a store snapshot: waiting times, hall-call counts,
//! direction and mode splits, event logs, and display-panel travel estimates.
//!
//! Every aggregate distinguishes "no qualifying records" ([`Aggregate::NoData`])
//! from a zero-valued result. Percentages are computed in integer tenths,
//! rounded half-up, with the remainder bucket corrected so the parts sum to
//! exactly 1000 tenths.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::domain::{Direction, EventType, LiftEvent, LiftId, OperationMode, QueryScope};
use crate::site::SiteConfig;
use crate::store::{EventFilter, Store};
use crate::time::{TimeWindow, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("unknown building {0}")]
    UnknownBuilding(String),
    #[error("level {level} does not exist in building {building}")]
    UnknownLevel { building: String, level: i32 },
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::UnknownBuilding(_) => "unknown_building",
            AnalyticsError::UnknownLevel { .. } => "unknown_level",
        }
    }
}

/// A result that may be absent because nothing qualified. Serialises as
/// `{"no_data": true}` or as the bare value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregate<T> {
    NoData,
    Value(T),
}

impl<T> Aggregate<T> {
    pub fn is_no_data(&self) -> bool {
        matches!(self, Aggregate::NoData)
    }

    pub fn value(self) -> Option<T> {
        match self {
            Aggregate::NoData => None,
            Aggregate::Value(v) => Some(v),
        }
    }

    pub fn as_ref(&self) -> Aggregate<&T> {
        match self {
            Aggregate::NoData => Aggregate::NoData,
            Aggregate::Value(v) => Aggregate::Value(v),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Aggregate<U> {
        match self {
            Aggregate::NoData => Aggregate::NoData,
            Aggregate::Value(v) => Aggregate::Value(f(v)),
        }
    }
}

impl<T: Serialize> Serialize for Aggregate<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Aggregate::NoData => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("no_data", &true)?;
                m.end()
            }
            Aggregate::Value(v) => v.serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionStats {
    pub count: u64,
    pub mean_s: f64,
    pub max_s: u32,
    pub min_s: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaitTimeStats {
    pub up: Aggregate<DirectionStats>,
    pub down: Aggregate<DirectionStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HallCallCounts {
    pub up: u64,
    pub down: u64,
}

/// A percentage with one decimal, held as integer tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(u16);

impl Percent {
    pub fn from_tenths(tenths: u16) -> Self {
        Percent(tenths)
    }

    pub fn tenths(self) -> u16 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl std::fmt::Display for Percent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DirectionSplit {
    pub up_pct: Percent,
    pub down_pct: Percent,
}

/// Share of lift-time spent in each mode over the window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSplit {
    pub percent: BTreeMap<OperationMode, Percent>,
    pub lift_seconds: BTreeMap<OperationMode, u64>,
}

impl Serialize for ModeSplit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row {
            pct: Percent,
            lift_seconds: u64,
        }
        let mut m = s.serialize_map(Some(self.percent.len()))?;
        for (mode, pct) in &self.percent {
            m.serialize_entry(mode.as_str(), &Row { pct: *pct, lift_seconds: self.lift_seconds[mode] })?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    General,
    HallCall,
    Emergency,
}

impl LogKind {
    pub fn event_types(self) -> Option<&'static [EventType]> {
        match self {
            LogKind::General => None,
            LogKind::HallCall => Some(&[EventType::HallCallRegistered, EventType::HallCallServed]),
            LogKind::Emergency => Some(&[EventType::Emergency]),
        }
    }
}

impl std::str::FromStr for LogKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(LogKind::General),
            "hall" | "hall_call" | "hall-call" => Ok(LogKind::HallCall),
            "emergency" => Ok(LogKind::Emergency),
            other => Err(format!("unknown log kind {other:?}")),
        }
    }
}

/// Rounds `part / total` to tenths of a percent, half-up.
pub fn round_tenths(part: u64, total: u64) -> u16 {
    debug_assert!(total > 0 && part <= total);
    ((2000 * part as u128 + total as u128) / (2 * total as u128)) as u16
}

/// Analytics bound to one store and site.
#[derive(Clone, Copy)]
pub struct Analytics<'a> {
    store: &'a Store,
    site: &'a SiteConfig,
}

impl<'a> Analytics<'a> {
    pub fn new(store: &'a Store, site: &'a SiteConfig) -> Self {
        Analytics { store, site }
    }

    fn events(&self, scope: &QueryScope, window: &TimeWindow, types: &[EventType]) -> Vec<LiftEvent> {
        let filter = EventFilter::new(scope.clone(), *window).with_types(types.iter().copied());
        self.store.query_events(&filter)
    }

    /// Pooled per-direction statistics over served hall calls.
    pub fn wait_time_stats(&self, scope: &QueryScope, window: &TimeWindow) -> WaitTimeStats {
        #[derive(Default)]
        struct Acc {
            count: u64,
            sum: u64,
            max: u32,
            min: u32,
        }
        let mut up = Acc::default();
        let mut down = Acc::default();
        for ev in self.events(scope, window, &[EventType::HallCallServed]) {
            let acc = match ev.direction() {
                Direction::Up => &mut up,
                Direction::Down => &mut down,
                Direction::None => continue,
            };
            let w = ev.wait_time_s().expect("served calls carry a wait time");
            acc.min = if acc.count == 0 { w } else { acc.min.min(w) };
            acc.max = acc.max.max(w);
            acc.sum += u64::from(w);
            acc.count += 1;
        }
        let finish = |a: Acc| {
            if a.count == 0 {
                Aggregate::NoData
            } else {
                Aggregate::Value(DirectionStats {
                    count: a.count,
                    mean_s: a.sum as f64 / a.count as f64,
                    max_s: a.max,
                    min_s: a.min,
                })
            }
        };
        WaitTimeStats { up: finish(up), down: finish(down) }
    }

    pub fn hall_call_count(&self, scope: &QueryScope, window: &TimeWindow) -> Aggregate<HallCallCounts> {
        let mut counts = HallCallCounts { up: 0, down: 0 };
        for ev in self.events(scope, window, &[EventType::HallCallRegistered]) {
            match ev.direction() {
                Direction::Up => counts.up += 1,
                Direction::Down => counts.down += 1,
                Direction::None => {}
            }
        }
        if counts.up + counts.down == 0 {
            Aggregate::NoData
        } else {
            Aggregate::Value(counts)
        }
    }

    pub fn direction_percentages(&self, scope: &QueryScope, window: &TimeWindow) -> Aggregate<DirectionSplit> {
        self.hall_call_count(scope, window).map(|c| {
            let up = round_tenths(c.up, c.up + c.down);
            DirectionSplit { up_pct: Percent(up), down_pct: Percent(1000 - up) }
        })
    }

    /// Time-weighted mode split. Each lift contributes from the mode of its
    /// latest mode change before the window (if any), then each mode change
    /// inside the window.
    pub fn mode_percentages(&self, scope: &QueryScope, window: &TimeWindow) -> Aggregate<ModeSplit> {
        let mut prior: BTreeMap<LiftId, OperationMode> = BTreeMap::new();
        if let Ok(before) = TimeWindow::new(Timestamp::MIN, window.start()) {
            for ev in self.events(scope, &before, &[EventType::ModeChange]) {
                prior.insert(ev.lift().clone(), ev.operation_mode());
            }
        }
        let mut changes: BTreeMap<LiftId, Vec<(Timestamp, OperationMode)>> = BTreeMap::new();
        for ev in self.events(scope, window, &[EventType::ModeChange]) {
            changes.entry(ev.lift().clone()).or_default().push((ev.occurred_at(), ev.operation_mode()));
        }

        let mut seconds: BTreeMap<OperationMode, u64> = OperationMode::ALL.iter().map(|&m| (m, 0)).collect();
        let lifts: std::collections::BTreeSet<&LiftId> = prior.keys().chain(changes.keys()).collect();
        for lift in lifts {
            let mut current = prior.get(lift).copied();
            let mut cursor = window.start();
            for &(at, mode) in changes.get(lift).map(Vec::as_slice).unwrap_or_default() {
                if let Some(m) = current {
                    *seconds.get_mut(&m).unwrap() += at.secs_since(cursor) as u64;
                }
                current = Some(mode);
                cursor = at;
            }
            if let Some(m) = current {
                *seconds.get_mut(&m).unwrap() += window.end().secs_since(cursor) as u64;
            }
        }

        let total: u64 = seconds.values().sum();
        if total == 0 {
            return Aggregate::NoData;
        }
        let mut tenths: BTreeMap<OperationMode, u16> =
            seconds.iter().map(|(&m, &s)| (m, round_tenths(s, total))).collect();
        let sum: i32 = tenths.values().map(|&t| i32::from(t)).sum();
        let remainder = *seconds
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(m, _)| m)
            .expect("four modes");
        let slot = tenths.get_mut(&remainder).unwrap();
        *slot = (i32::from(*slot) + 1000 - sum) as u16;
        Aggregate::Value(ModeSplit {
            percent: tenths.into_iter().map(|(m, t)| (m, Percent(t))).collect(),
            lift_seconds: seconds,
        })
    }

    pub fn event_log(&self, kind: LogKind, scope: &QueryScope, window: &TimeWindow) -> Vec<LiftEvent> {
        let mut filter = EventFilter::new(scope.clone(), *window);
        if let Some(types) = kind.event_types() {
            filter = filter.with_types(types.iter().copied());
        }
        self.store.query_events(&filter)
    }

    /// Mean historical wait in the travel direction, plus lift travel and one
    /// door dwell, using the building's configured kinematics.
    pub fn estimated_travel_time(
        &self,
        building: &str,
        from_level: i32,
        to_level: i32,
        window: &TimeWindow,
    ) -> Result<Aggregate<f64>, AnalyticsError> {
        let b = self.site.building(building).ok_or_else(|| AnalyticsError::UnknownBuilding(building.to_string()))?;
        for level in [from_level, to_level] {
            if !b.has_level(level) {
                return Err(AnalyticsError::UnknownLevel { building: building.to_string(), level });
            }
        }
        let direction = Direction::between(from_level, to_level);
        if direction == Direction::None {
            return Ok(Aggregate::Value(0.0));
        }
        let stats = self.wait_time_stats(&QueryScope::Building(building.to_string()), window);
        let wait = if direction == Direction::Up { stats.up } else { stats.down };
        let levels = f64::from((to_level - from_level).unsigned_abs());
        Ok(wait.map(|w| w.mean_s + levels * b.lift_travel_s_per_level + b.door_dwell_s))
    }

    /// Travel estimates from one level to every other level of the building.
    pub fn panel_estimates(
        &self,
        building: &str,
        from_level: i32,
        window: &TimeWindow,
    ) -> Result<Vec<(i32, Aggregate<f64>)>, AnalyticsError> {
        let b = self.site.building(building).ok_or_else(|| AnalyticsError::UnknownBuilding(building.to_string()))?;
        b.levels()
            .filter(|&l| l != from_level)
            .map(|l| self.estimated_travel_time(building, from_level, l, window).map(|e| (l, e)))
            .collect()
    }
}
