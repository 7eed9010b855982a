//! Linear-scan reference implementations. They read the raw event list in
//! append order and share no code with the modules under test.

use std::collections::{BTreeMap, HashMap};

use vt_core::analytics::LogKind;
use vt_core::ingest::WatchdogThreshold;
use vt_core::{Direction, EventType, LiftEvent, LiftId, OperationMode, QueryScope, SiteConfig, TimeWindow, Timestamp};

pub fn in_scope(scope: &QueryScope, lift: &LiftId) -> bool {
    match scope {
        QueryScope::SingleLift(id) => id == lift,
        QueryScope::Building(b) => lift.building() == b,
        QueryScope::AllLifts => true,
    }
}

pub fn in_window(window: &TimeWindow, t: Timestamp) -> bool {
    window.start() <= t && t < window.end()
}

/// Events in scope and window, ordered by time with ties kept in log order.
pub fn select<'a>(
    log: &'a [LiftEvent],
    scope: &QueryScope,
    window: &TimeWindow,
    types: Option<&[EventType]>,
) -> Vec<&'a LiftEvent> {
    let mut rows: Vec<(usize, &LiftEvent)> = log
        .iter()
        .enumerate()
        .filter(|(_, e)| in_scope(scope, e.lift()) && in_window(window, e.occurred_at()))
        .filter(|(_, e)| types.is_none_or(|ts| ts.contains(&e.event_type())))
        .collect();
    rows.sort_by_key(|(i, e)| (e.occurred_at(), *i));
    rows.into_iter().map(|(_, e)| e).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaitSummary {
    pub count: u64,
    pub mean: f64,
    pub max: u32,
    pub min: u32,
}

pub fn wait_summary(log: &[LiftEvent], scope: &QueryScope, window: &TimeWindow, dir: Direction) -> Option<WaitSummary> {
    let waits: Vec<u32> = select(log, scope, window, Some(&[EventType::HallCallServed]))
        .into_iter()
        .filter(|e| e.direction() == dir)
        .map(|e| e.wait_time_s().unwrap())
        .collect();
    if waits.is_empty() {
        return None;
    }
    let sum: u64 = waits.iter().map(|&w| u64::from(w)).sum();
    Some(WaitSummary {
        count: waits.len() as u64,
        mean: sum as f64 / waits.len() as f64,
        max: *waits.iter().max().unwrap(),
        min: *waits.iter().min().unwrap(),
    })
}

pub fn hall_counts(log: &[LiftEvent], scope: &QueryScope, window: &TimeWindow) -> (u64, u64) {
    let regs = select(log, scope, window, Some(&[EventType::HallCallRegistered]));
    let up = regs.iter().filter(|e| e.direction() == Direction::Up).count() as u64;
    let down = regs.iter().filter(|e| e.direction() == Direction::Down).count() as u64;
    (up, down)
}

/// `100 * part / total` in tenths of a percent, halves rounded up.
pub fn half_up_tenths(part: u64, total: u64) -> u16 {
    let q = 1000 * part / total;
    let r = 1000 * part % total;
    (q + u64::from(2 * r >= total)) as u16
}

/// (up, down) in tenths; down takes whatever makes the sum 1000.
pub fn direction_split(up: u64, down: u64) -> Option<(u16, u16)> {
    if up + down == 0 {
        return None;
    }
    let u = half_up_tenths(up, up + down);
    Some((u, 1000 - u))
}

/// Seconds each mode was in force within the window, by stepping through
/// every second. A lift with no known mode at some second contributes nothing
/// for that second.
pub fn mode_seconds_sweep(log: &[LiftEvent], scope: &QueryScope, window: &TimeWindow) -> BTreeMap<OperationMode, u64> {
    let mut per_lift: BTreeMap<&LiftId, Vec<(Timestamp, usize, OperationMode)>> = BTreeMap::new();
    for (i, e) in log.iter().enumerate() {
        if e.event_type() == EventType::ModeChange && in_scope(scope, e.lift()) && e.occurred_at() < window.end() {
            per_lift.entry(e.lift()).or_default().push((e.occurred_at(), i, e.operation_mode()));
        }
    }
    let mut out: BTreeMap<OperationMode, u64> = OperationMode::ALL.iter().map(|&m| (m, 0)).collect();
    for changes in per_lift.values_mut() {
        changes.sort();
        let mut next = 0;
        let mut mode = None;
        for s in window.start().unix()..window.end().unix() {
            while next < changes.len() && changes[next].0.unix() <= s {
                mode = Some(changes[next].2);
                next += 1;
            }
            if let Some(m) = mode {
                *out.get_mut(&m).unwrap() += 1;
            }
        }
    }
    out
}

/// Tenths per mode. Each bucket is rounded half-up; the bucket with the most
/// seconds (lowest mode id on ties) absorbs the rounding error.
pub fn mode_split(seconds: &BTreeMap<OperationMode, u64>) -> Option<BTreeMap<OperationMode, u16>> {
    let total: u64 = seconds.values().sum();
    if total == 0 {
        return None;
    }
    let mut by_id: Vec<(OperationMode, u64)> = seconds.iter().map(|(&m, &s)| (m, s)).collect();
    by_id.sort_by_key(|(m, _)| m.id());
    let mut biggest = by_id[0];
    for &(m, s) in &by_id[1..] {
        if s > biggest.1 {
            biggest = (m, s);
        }
    }
    let mut tenths: BTreeMap<OperationMode, i64> =
        by_id.iter().map(|&(m, s)| (m, i64::from(half_up_tenths(s, total)))).collect();
    let sum: i64 = tenths.values().sum();
    *tenths.get_mut(&biggest.0).unwrap() += 1000 - sum;
    Some(tenths.into_iter().map(|(m, t)| (m, t as u16)).collect())
}

pub fn event_log(log: &[LiftEvent], kind: LogKind, scope: &QueryScope, window: &TimeWindow) -> Vec<LiftEvent> {
    let types: Option<Vec<EventType>> = match kind {
        LogKind::General => None,
        LogKind::HallCall => Some(vec![EventType::HallCallRegistered, EventType::HallCallServed]),
        LogKind::Emergency => Some(vec![EventType::Emergency]),
    };
    select(log, scope, window, types.as_deref()).into_iter().cloned().collect()
}

/// Expected status projection after feeding events in arrival order: mode
/// changes apply when they differ from the current mode, and any event from a
/// lift marked as silent restores it to the event's mode.
#[derive(Debug, Clone)]
pub struct StatusModel {
    pub modes: BTreeMap<LiftId, (OperationMode, Option<Timestamp>)>,
    pub last_contact: HashMap<LiftId, Timestamp>,
    pub transitions: usize,
    pub into_not_working: usize,
}

impl StatusModel {
    pub fn new(site: &SiteConfig) -> Self {
        StatusModel {
            modes: site.lifts().map(|l| (l.id.clone(), (OperationMode::NoCommunication, None))).collect(),
            last_contact: HashMap::new(),
            transitions: 0,
            into_not_working: 0,
        }
    }

    fn set(&mut self, lift: &LiftId, mode: OperationMode, at: Timestamp) -> bool {
        let slot = self.modes.get_mut(lift).expect("configured lift");
        if slot.0 == mode {
            return false;
        }
        *slot = (mode, Some(at));
        self.transitions += 1;
        if !mode.is_working() {
            self.into_not_working += 1;
        }
        true
    }

    pub fn feed(&mut self, ev: &LiftEvent) {
        let t = ev.occurred_at();
        let lc = self.last_contact.entry(ev.lift().clone()).or_insert(t);
        if t > *lc {
            *lc = t;
        }
        let silent = self.modes[ev.lift()].0 == OperationMode::NoCommunication;
        if ev.event_type() == EventType::ModeChange || silent {
            self.set(ev.lift(), ev.operation_mode(), t);
        }
    }

    /// Lifts in Normal whose last contact is more than the threshold ago.
    pub fn sweep(&mut self, now: Timestamp, threshold: WatchdogThreshold) -> Vec<LiftId> {
        let due: Vec<LiftId> = self
            .modes
            .iter()
            .filter(|(_, (m, _))| *m == OperationMode::Normal)
            .filter(|(l, _)| self.last_contact.get(*l).is_some_and(|&t| now.unix() - t.unix() > threshold.secs() as i64))
            .map(|(l, _)| l.clone())
            .collect();
        for l in &due {
            self.set(l, OperationMode::NoCommunication, now);
        }
        due
    }
}

/// Checks simulator output: each served call matches an earlier registration
/// of the same lift, floor and direction exactly `wait` seconds before it.
/// Returns a description of every violation.
pub fn pairing_violations(events: &[LiftEvent]) -> Vec<String> {
    let mut open: HashMap<(LiftId, i32, Direction, Timestamp), usize> = HashMap::new();
    let mut bad = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let key = |t: Timestamp| (e.lift().clone(), e.floor_position(), e.direction(), t);
        match e.event_type() {
            EventType::HallCallRegistered => *open.entry(key(e.occurred_at())).or_default() += 1,
            EventType::HallCallServed => {
                let wait = i64::from(e.wait_time_s().unwrap_or(u32::MAX));
                let reg = Timestamp::from_unix(e.occurred_at().unix() - wait);
                match open.get_mut(&key(reg)) {
                    Some(n) if *n > 0 => *n -= 1,
                    _ => bad.push(format!("event {i}: served call at {} has no registration at {reg}", e.occurred_at())),
                }
            }
            _ => {}
        }
    }
    for ((lift, floor, dir, t), n) in open {
        if n > 0 {
            bad.push(format!("{n} registration(s) {lift} level {floor} {dir} at {t} never served"));
        }
    }
    bad
}
