//! Seeded generators for sites, wait tables and event sequences.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vt_core::domain::validate_event;
use vt_core::site::{
    BridgeSpec, Building, EscalatorDirection, EscalatorSpec, LiftSpec, PlannerDefaults, SiteDocument, StairSpec,
};
use vt_core::{Direction, DoorStatus, EventType, LiftEvent, LiftId, Location, OperationMode, RawEvent, SiteConfig, Timestamp};

pub const MAX_NODES: usize = 60;
pub const MAX_BUILDINGS: usize = 5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One decimal place keeps millisecond costs exact.
fn tenths(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    f64::from(rng.random_range(lo * 10..=hi * 10)) / 10.0
}

/// A random valid topology with at most [`MAX_BUILDINGS`] buildings and
/// [`MAX_NODES`] (building, level) nodes. Some nodes may be unreachable.
pub fn random_site(seed: u64) -> SiteConfig {
    let mut rng = rng(seed);
    let nb = rng.random_range(1..=MAX_BUILDINGS);
    let mut doc = SiteDocument {
        planner: PlannerDefaults {
            default_lift_wait_s: tenths(&mut rng, 5, 90),
            stairs_s_per_level: tenths(&mut rng, 8, 30),
            escalator_s_per_level: tenths(&mut rng, 10, 40),
            stairs_advisory_margin: 0.15,
        },
        ..SiteDocument::default()
    };
    let mut budget = MAX_NODES;
    for i in 0..nb {
        let left = nb - i - 1;
        let most = (budget - 2 * left).min(16);
        let count = rng.random_range(2..=most) as i32;
        budget -= count as usize;
        let lowest = rng.random_range(-1..=1);
        let b = Building {
            code: format!("B{}", i + 1),
            lowest_level: lowest,
            highest_level: lowest + count - 1,
            lift_travel_s_per_level: tenths(&mut rng, 2, 6),
            door_dwell_s: tenths(&mut rng, 3, 10),
        };
        let levels: Vec<i32> = b.levels().collect();
        for unit in 1..=rng.random_range(0..=3u32) {
            let serves = if rng.random_bool(0.5) {
                None
            } else {
                let mut s: Vec<i32> = levels.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                s.extend([levels[0], *levels.last().unwrap()]);
                Some(s)
            };
            doc.lifts.push(LiftSpec {
                building: b.code.clone(),
                unit,
                serves,
                travel_s_per_level: rng.random_bool(0.3).then(|| tenths(&mut rng, 1, 5)),
                door_dwell_s: None,
            });
        }
        if rng.random_bool(0.85) {
            let (from_level, to_level) = if rng.random_bool(0.7) {
                (b.lowest_level, b.highest_level)
            } else {
                segment(&mut rng, &levels)
            };
            doc.stairs.push(StairSpec { building: b.code.clone(), from_level, to_level, travel_s_per_level: None });
        }
        for _ in 0..rng.random_range(0..=2) {
            let (from_level, to_level) = segment(&mut rng, &levels);
            let direction = if rng.random_bool(0.5) { EscalatorDirection::Up } else { EscalatorDirection::Down };
            let travel = rng.random_bool(0.3).then(|| tenths(&mut rng, 5, 40));
            doc.escalators.push(EscalatorSpec {
                building: b.code.clone(),
                from_level,
                to_level,
                direction,
                travel_s_per_level: travel,
            });
        }
        doc.buildings.push(b);
    }
    let nodes: Vec<Location> = doc
        .buildings
        .iter()
        .flat_map(|b| b.levels().map(|l| Location::new(b.code.clone(), l)))
        .collect();
    if nb > 1 {
        for _ in 0..rng.random_range(1..=nb + 2) {
            let from = nodes.choose(&mut rng).unwrap().clone();
            let to = nodes.choose(&mut rng).unwrap().clone();
            if from != to {
                doc.bridges.push(BridgeSpec { from, to, walk_s: tenths(&mut rng, 5, 120) });
            }
        }
    }
    SiteConfig::from_document(doc).expect("generated site is valid")
}

fn segment(rng: &mut ChaCha8Rng, levels: &[i32]) -> (i32, i32) {
    let a = rng.random_range(0..levels.len() - 1);
    let b = rng.random_range(a + 1..levels.len());
    (levels[a], levels[b])
}

/// Historical mean waits for some (building, direction) pairs; the rest have
/// no history.
pub fn random_waits(site: &SiteConfig, seed: u64) -> HashMap<(String, Direction), f64> {
    let mut rng = rng(seed);
    let mut waits = HashMap::new();
    for b in site.buildings() {
        for d in [Direction::Up, Direction::Down] {
            if rng.random_bool(0.6) {
                waits.insert((b.code.clone(), d), f64::from(rng.random_range(0..1500u32)) / 10.0);
            }
        }
    }
    waits
}

pub fn random_lift_subset(site: &SiteConfig, seed: u64, p_down: f64) -> Vec<LiftId> {
    let mut rng = rng(seed);
    site.lifts().filter(|_| rng.random_bool(p_down)).map(|l| l.id.clone()).collect()
}

fn event(site: &SiteConfig, lift: &LiftId, t: i64, event_type: EventType, mode: OperationMode) -> LiftEvent {
    let floor = site.lift(lift).unwrap().serves[0];
    validate_event(
        RawEvent {
            lift: lift.clone(),
            occurred_at: Timestamp::from_unix(t),
            direction: Direction::None,
            wait_time_s: None,
            operation_mode: mode,
            event_type,
            floor_position: floor,
            door_status: DoorStatus::Closed,
        },
        site,
    )
    .expect("generated event is valid")
}

/// A stream of mode changes and heartbeats as loggers might deliver it:
/// timestamps jitter backwards, and some events are delivered twice.
pub fn mode_sequence(site: &SiteConfig, seed: u64, len: usize, base: i64) -> Vec<LiftEvent> {
    let mut rng = rng(seed);
    let lifts: Vec<LiftId> = site.lifts().map(|l| l.id.clone()).collect();
    let mut out: Vec<LiftEvent> = Vec::with_capacity(len);
    let mut clock = base;
    while out.len() < len {
        if !out.is_empty() && rng.random_bool(0.12) {
            let again = out[rng.random_range(0..out.len())].clone();
            out.push(again);
            continue;
        }
        clock += rng.random_range(0..=120);
        let t = clock - rng.random_range(0..=600).min(clock - base);
        let lift = lifts.choose(&mut rng).unwrap();
        let mode = *OperationMode::ALL.choose(&mut rng).unwrap();
        if rng.random_bool(0.6) {
            out.push(event(site, lift, t, EventType::ModeChange, mode));
        } else {
            let mode = if rng.random_bool(0.8) { OperationMode::Normal } else { mode };
            out.push(event(site, lift, t, EventType::Heartbeat, mode));
        }
    }
    out
}

/// A Normal-mode heartbeat from `lift` at `t`.
pub fn heartbeat_at(site: &SiteConfig, lift: &LiftId, t: i64) -> LiftEvent {
    event(site, lift, t, EventType::Heartbeat, OperationMode::Normal)
}

pub fn mode_change_at(site: &SiteConfig, lift: &LiftId, t: i64, mode: OperationMode) -> LiftEvent {
    event(site, lift, t, EventType::ModeChange, mode)
}
