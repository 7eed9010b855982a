//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod support;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use vt_core::analytics::{Aggregate, Analytics, LogKind};
use vt_core::domain::{validate_event, DoorStatus, RawEvent};
use vt_core::ingest::{decode_payload, Ingestor, LoggerFrame, WatchdogThreshold};
use vt_core::planner::{build_graph, cost_table, plan_route, LiftAvailability, RouteQuery};
use vt_core::simulator::{random_config, render_output, simulate, SimConfig};
use vt_core::status::{fold_transitions, MemorySink, StatusBoard};
use vt_core::store::Store;
use vt_core::wire::encode_event;
use vt_core::{Direction, EventType, LiftEvent, LiftId, OperationMode, QueryScope, SiteConfig, TimeWindow, Timestamp};
use vt_testkit::{fixture_path, fixture_site, gen, oracle, paths, store_with};

const DAY: i64 = 86_400;
const BASE: i64 = 1_709_251_200; // 2024-03-01T00:00:00Z

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn scopes(site: &SiteConfig) -> Vec<QueryScope> {
    let mut v = vec![QueryScope::AllLifts];
    v.extend(site.buildings().map(|b| QueryScope::Building(b.code.clone())));
    v.extend(site.lifts().map(|l| QueryScope::SingleLift(l.id.clone())));
    v
}

fn day_log(seed: u64) -> Vec<LiftEvent> {
    simulate(&random_config(fixture_site(), seed, Timestamp::from_unix(BASE), DAY, 1.0)).unwrap()
}

fn random_window(rng: &mut impl Rng) -> TimeWindow {
    let start = BASE + rng.random_range(-2 * 3600..DAY);
    let len = match rng.random_range(0..4) {
        0 => rng.random_range(1..120),
        1 => rng.random_range(120..3600),
        _ => rng.random_range(3600..DAY + 3600),
    };
    TimeWindow::new(Timestamp::from_unix(start), Timestamp::from_unix(start + len)).unwrap()
}

/// Every aggregation against the linear-scan oracles. Returns the number of
/// NoData results seen, split into (agreed no-data, agreed value).
fn compare(log: &[LiftEvent], site: &SiteConfig, a: &Analytics, scope: &QueryScope, w: &TimeWindow) -> Result<(u32, u32), String> {
    let (mut none, mut some) = (0, 0);
    let mut tally = |is_none: bool| if is_none { none += 1 } else { some += 1 };

    let stats = a.wait_time_stats(scope, w);
    for (got, dir) in [(stats.up, Direction::Up), (stats.down, Direction::Down)] {
        match (got, oracle::wait_summary(log, scope, w, dir)) {
            (Aggregate::NoData, None) => tally(true),
            (Aggregate::Value(g), Some(o)) => {
                ensure!((g.count, g.max_s, g.min_s) == (o.count, o.max, o.min), "{scope} {w:?} {dir}: {g:?} vs {o:?}");
                ensure!((g.mean_s - o.mean).abs() <= 1e-9, "{scope} {w:?} {dir}: mean {} vs {}", g.mean_s, o.mean);
                ensure!(f64::from(g.min_s) <= g.mean_s && g.mean_s <= f64::from(g.max_s), "min/mean/max order");
                tally(false);
            }
            (g, o) => return Err(format!("{scope} {w:?} {dir}: wait stats {g:?}, oracle {o:?}")),
        }
    }

    let (up, down) = oracle::hall_counts(log, scope, w);
    match a.hall_call_count(scope, w) {
        Aggregate::NoData => {
            ensure!(up + down == 0, "{scope} {w:?}: hall calls NoData but oracle {up}/{down}");
            tally(true);
        }
        Aggregate::Value(c) => {
            ensure!((c.up, c.down) == (up, down), "{scope} {w:?}: hall calls {c:?} vs {up}/{down}");
            ensure!(up + down > 0, "{scope} {w:?}: zero hall calls reported as a value");
            tally(false);
        }
    }

    let split = a.direction_percentages(scope, w).value().map(|d| (d.up_pct.tenths(), d.down_pct.tenths()));
    ensure!(split == oracle::direction_split(up, down), "{scope} {w:?}: direction split {split:?}");

    let seconds = oracle::mode_seconds_sweep(log, scope, w);
    match a.mode_percentages(scope, w) {
        Aggregate::NoData => {
            ensure!(oracle::mode_split(&seconds).is_none(), "{scope} {w:?}: mode split NoData, oracle {seconds:?}");
            tally(true);
        }
        Aggregate::Value(m) => {
            ensure!(m.lift_seconds == seconds, "{scope} {w:?}: lift seconds {:?} vs {seconds:?}", m.lift_seconds);
            let got: BTreeMap<_, _> = m.percent.iter().map(|(&k, p)| (k, p.tenths())).collect();
            ensure!(Some(&got) == oracle::mode_split(&seconds).as_ref(), "{scope} {w:?}: mode split {got:?}");
            tally(false);
        }
    }

    for kind in [LogKind::General, LogKind::HallCall, LogKind::Emergency] {
        ensure!(a.event_log(kind, scope, w) == oracle::event_log(log, kind, scope, w), "{scope} {w:?}: {kind:?} log");
    }

    if let QueryScope::Building(b) = scope {
        let building = site.building(b).unwrap();
        let from = building.lowest_level;
        let to = building.highest_level;
        let est = a.estimated_travel_time(b, from, to, w).map_err(|e| e.to_string())?;
        let levels = f64::from(to - from);
        let want = oracle::wait_summary(log, scope, w, Direction::Up)
            .map(|s| s.mean + levels * building.lift_travel_s_per_level + building.door_dwell_s);
        match (est, want) {
            (Aggregate::NoData, None) => {}
            (Aggregate::Value(g), Some(o)) => ensure!((g - o).abs() <= 1e-9, "{b} travel estimate {g} vs {o}"),
            (g, o) => return Err(format!("{b} {w:?}: travel estimate {g:?}, oracle {o:?}")),
        }
    }
    Ok((none, some))
}

fn criterion_1() -> Outcome {
    let site = fixture_site();
    let scopes = scopes(&site);
    let started = Instant::now();
    let (mut events, mut checks) = (0, 0);
    for seed in 0..100u64 {
        let log = day_log(seed);
        ensure!(log.len() <= 10_000, "seed {seed}: {} events", log.len());
        events += log.len();
        let store = store_with(&log);
        let a = Analytics::new(&store, &site);
        let mut rng = gen::rng(seed);
        let full = TimeWindow::new(Timestamp::from_unix(BASE), Timestamp::from_unix(BASE + DAY)).unwrap();
        compare(&log, &site, &a, &QueryScope::AllLifts, &full)?;
        for _ in 0..3 {
            let scope = &scopes[rng.random_range(0..scopes.len())];
            compare(&log, &site, &a, scope, &random_window(&mut rng))?;
            checks += 1;
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("100 logs, {events} events, {checks} random (scope, window) pairs, {:.1} s", elapsed.as_secs_f64()))
}

fn zero_wait_log(site: &SiteConfig) -> Vec<LiftEvent> {
    let lift = site.lifts().next().unwrap().id.clone();
    let mk = |t: i64, event_type, wait: Option<u32>| {
        validate_event(
            RawEvent {
                lift: lift.clone(),
                occurred_at: Timestamp::from_unix(t),
                direction: if wait.is_some() || event_type == EventType::HallCallRegistered { Direction::Up } else { Direction::None },
                wait_time_s: wait,
                operation_mode: OperationMode::Normal,
                event_type,
                floor_position: site.building(lift.building()).unwrap().lowest_level,
                door_status: if wait.is_some() { DoorStatus::Opening } else { DoorStatus::Closed },
            },
            site,
        )
        .unwrap()
    };
    vec![
        mk(BASE + 100, EventType::ModeChange, None),
        mk(BASE + 200, EventType::HallCallRegistered, None),
        mk(BASE + 200, EventType::HallCallServed, Some(0)),
    ]
}

fn criterion_2() -> Outcome {
    let site = fixture_site();
    let scopes = scopes(&site);
    let (mut none, mut some) = (0, 0);
    for seed in 0..30u64 {
        let log = simulate(&random_config(fixture_site(), seed ^ 0xA5, Timestamp::from_unix(BASE), 6 * 3600, 0.6)).unwrap();
        let store = store_with(&log);
        let a = Analytics::new(&store, &site);
        let mut rng = gen::rng(seed ^ 0x5A);
        for _ in 0..30 {
            let scope = &scopes[rng.random_range(0..scopes.len())];
            let start = BASE + rng.random_range(-6 * 3600..9 * 3600);
            let len = rng.random_range(1..3 * 3600);
            let w = TimeWindow::new(Timestamp::from_unix(start), Timestamp::from_unix(start + len)).unwrap();
            let (n, s) = compare(&log, &site, &a, scope, &w)?;
            none += n;
            some += s;
        }
    }
    ensure!(none > 0 && some > 0, "fuzzing never reached both sides ({none} NoData, {some} values)");

    let log = zero_wait_log(&site);
    let store = store_with(&log);
    let a = Analytics::new(&store, &site);
    let w = TimeWindow::new(Timestamp::from_unix(BASE + 200), Timestamp::from_unix(BASE + 201)).unwrap();
    let lift = QueryScope::SingleLift(log[0].lift().clone());
    let up = a.wait_time_stats(&lift, &w).up;
    ensure!(up.value().is_some_and(|s| s.mean_s == 0.0 && s.max_s == 0), "zero wait came back as {up:?}");
    compare(&log, &site, &a, &lift, &w)?;
    let quiet = TimeWindow::new(Timestamp::from_unix(BASE + 300), Timestamp::from_unix(BASE + 400)).unwrap();
    let hall = a.hall_call_count(&lift, &quiet);
    ensure!(hall == Aggregate::NoData, "empty window gave {hall:?}");
    let modes = a.mode_percentages(&lift, &quiet);
    ensure!(modes.value().is_some(), "known mode over a quiet window must not be NoData");
    Ok(format!("{} fuzzed pairs: {none} NoData and {some} value results all agree; zero wait is a value", 30 * 30))
}

struct Down(Vec<LiftId>);

impl LiftAvailability for Down {
    fn is_working(&self, lift: &LiftId) -> bool {
        !self.0.contains(lift)
    }
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let at = Timestamp::from_unix(BASE);
    let (mut routed, mut unreachable, mut max_nodes) = (0, 0, 0);
    for seed in 0..200u64 {
        let site = gen::random_site(seed);
        let graph = build_graph(&site);
        let n = graph.nodes().len();
        max_nodes = max_nodes.max(n);
        ensure!(n <= gen::MAX_NODES && site.buildings().count() <= gen::MAX_BUILDINGS, "site {seed} too large");
        let waits = gen::random_waits(&site, seed);
        let down = Down(gen::random_lift_subset(&site, seed, 0.2));
        let mut rng = gen::rng(seed);
        for _ in 0..3 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let q = RouteQuery::new(graph.location(a).clone(), graph.location(b).clone(), at);
            let costs = cost_table(&graph, &q, &waits, &down);
            let best = paths::cheapest_simple_path(&graph, &costs, a, b);
            let first = plan_route(&q, &graph, &waits, &down);
            let second = plan_route(&q, &graph, &waits, &down);
            ensure!(first == second, "site {seed}: two invocations differ");
            match (first, best) {
                (Ok(plan), Some(ms)) => {
                    ensure!(plan.total_ms == ms, "site {seed} {a}->{b}: planner {} ms, enumeration {ms} ms", plan.total_ms);
                    ensure!((plan.total_s - ms as f64 / 1000.0).abs() < 1e-9, "site {seed}: total_s {}", plan.total_s);
                    routed += 1;
                }
                (Err(_), None) => unreachable += 1,
                (got, want) => return Err(format!("site {seed} {a}->{b}: planner {got:?}, enumeration {want:?}")),
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "200 sites (up to {max_nodes} nodes), {routed} optimal routes and {unreachable} agreed no-route, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

struct Rig {
    site: Arc<SiteConfig>,
    store: Arc<Store>,
    sink: MemorySink,
    ingest: Ingestor,
}

fn rig() -> Rig {
    let site = Arc::new(fixture_site());
    let store = Arc::new(Store::in_memory());
    let sink = MemorySink::new();
    let board = Arc::new(StatusBoard::open(site.clone(), store.clone(), Box::new(sink.clone())).unwrap());
    let ingest = Ingestor::new(site.clone(), store.clone(), board, HashMap::new());
    Rig { site, store, sink, ingest }
}

fn feed(rig: &Rig, events: &[LiftEvent], batch: usize, now: Timestamp) {
    for chunk in events.chunks(batch.max(1)) {
        let frame = LoggerFrame::new("logger", None, chunk.to_vec()).unwrap();
        rig.ingest.ingest_frame(frame, now).unwrap();
    }
}

fn criterion_4() -> Outcome {
    let now = Timestamp::from_unix(BASE + DAY);
    let mut notified = 0;
    for seed in 0..1000u64 {
        let rig = rig();
        let mut rng = gen::rng(seed);
        let events = gen::mode_sequence(&rig.site, seed, rng.random_range(1..150), BASE);
        feed(&rig, &events, rng.random_range(1..10), now);
        let mut model = oracle::StatusModel::new(&rig.site);
        events.iter().for_each(|e| model.feed(e));

        let board = rig.ingest.status();
        ensure!(board.dispatches().len() == model.into_not_working, "seed {seed}: outbox {} vs {}", board.dispatches().len(), model.into_not_working);
        ensure!(rig.sink.delivered().len() == model.into_not_working, "seed {seed}: sink count");
        ensure!(board.transitions().len() == model.transitions, "seed {seed}: transition count");
        notified += model.into_not_working;

        let live = rig.ingest.current_statuses(now);
        let replay_sink = MemorySink::new();
        let replayed = StatusBoard::open(rig.site.clone(), rig.store.clone(), Box::new(replay_sink.clone())).unwrap();
        ensure!(replayed.current_statuses(now, &rig.ingest.last_contact()) == live, "seed {seed}: replay differs");
        ensure!(replay_sink.attempts() == 0, "seed {seed}: replay sent notifications");
        let folded: BTreeMap<String, _> =
            fold_transitions(&rig.site, board.transitions().iter()).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let expected: BTreeMap<String, _> = model.modes.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        ensure!(folded == expected, "seed {seed}: fold differs from the model");
    }
    Ok(format!("1000 sequences, {notified} notifications, each matching the model; replay reproduces statuses"))
}

fn criterion_5() -> Outcome {
    let threshold = WatchdogThreshold::new(900).unwrap();
    let mut moved_total = 0;
    for seed in 0..300u64 {
        let rig = rig();
        let mut rng = gen::rng(seed);
        let now = BASE + 10_000;
        let lifts: Vec<_> = rig.site.lifts().map(|l| l.id.clone()).collect();
        let mut events = Vec::new();
        let mut expected = Vec::new();
        for lift in &lifts {
            let age = match rng.random_range(0..4) {
                0 => 900,
                1 => 901,
                _ => rng.random_range(0..1800),
            };
            let t = now - age;
            events.push(gen::heartbeat_at(&rig.site, lift, t));
            let fault = rng.random_bool(0.3).then(|| [OperationMode::OutOfService, OperationMode::InMaintenance][rng.random_range(0..2)]);
            if let Some(mode) = fault {
                events.push(gen::mode_change_at(&rig.site, lift, t, mode));
            }
            if age > 900 && fault.is_none() {
                expected.push(lift.clone());
            }
        }
        events.sort_by_key(|e| e.occurred_at());
        feed(&rig, &events, 4, Timestamp::from_unix(now));
        expected.sort();
        let mut model = oracle::StatusModel::new(&rig.site);
        events.iter().for_each(|e| model.feed(e));
        let now = Timestamp::from_unix(now);
        let mut moved = rig.ingest.watchdog_sweep(now, threshold);
        moved.sort();
        ensure!(moved == expected, "seed {seed}: swept {moved:?}, expected {expected:?}");
        ensure!(model.sweep(now, threshold) == expected, "seed {seed}: model disagrees");
        ensure!(rig.ingest.watchdog_sweep(now, threshold).is_empty(), "seed {seed}: second sweep moved lifts");
        ensure!(rig.sink.delivered().len() >= moved.len(), "seed {seed}: watchdog transitions not notified");
        moved_total += moved.len();
    }
    Ok(format!("300 fleets, {moved_total} lifts swept, none at exactly 900 s, second sweep always empty"))
}

fn criterion_6() -> Outcome {
    let site = fixture_site();
    let mut checked = 0;
    for seed in 0..20u64 {
        let cfg = random_config(fixture_site(), seed, Timestamp::from_unix(BASE), 6 * 3600, 2.0);
        let events = simulate(&cfg).unwrap();
        let text = render_output(&cfg, &events);
        ensure!(text == render_output(&cfg, &simulate(&cfg.clone()).unwrap()), "seed {seed}: output differs between runs");
        let violations = oracle::pairing_violations(&events);
        ensure!(violations.is_empty(), "seed {seed}: {violations:?}");
        ensure!(decode_payload(text.as_bytes(), &site).map_err(|e| e.to_string())? == events, "seed {seed}: decode differs");

        let dir = tempfile::tempdir().unwrap();
        {
            let store = Arc::new(Store::open(dir.path(), &site).unwrap());
            let board = Arc::new(StatusBoard::open(Arc::new(site.clone()), store.clone(), Box::new(MemorySink::new())).unwrap());
            let ingest = Ingestor::new(Arc::new(site.clone()), store, board, HashMap::from([("l".into(), "t".into())]));
            for chunk in text.lines().collect::<Vec<_>>().chunks(500) {
                let frame = ingest.decode(chunk.join("\n").as_bytes(), "l", None).map_err(|e| e.to_string())?;
                ingest.ingest_frame(frame, Timestamp::from_unix(BASE + DAY)).map_err(|e| e.to_string())?;
            }
        }
        let stored: Vec<_> = Store::open(dir.path(), &site).unwrap().all_events().into_iter().map(|r| r.event).collect();
        ensure!(render_output(&cfg, &stored) == text, "seed {seed}: store round trip differs");
        checked += events.len();
    }
    let day = SimConfig::load(fixture_path("sim-day.toml")).unwrap();
    ensure!(render_output(&day, &simulate(&day).unwrap()) == render_output(&day, &simulate(&day).unwrap()), "sim-day differs");
    Ok(format!("20 seeds, {checked} events: identical bytes, paired calls, lossless ingest and store"))
}

async fn end_to_end() -> Outcome {
    use support::*;
    let cfg = SimConfig::load(fixture_path("sim-day.toml")).unwrap();
    let events = simulate(&cfg).unwrap();
    ensure!(cfg.site.buildings().count() == 3, "sample site must have three buildings");
    let dir = tempfile::tempdir().unwrap();
    let site = fixture_site();
    let store = Store::open(dir.path(), &site).unwrap();
    let end = cfg.start.plus_secs(cfg.duration_s);
    let h = start(site, store, end).await;
    let mut appended = 0;
    for chunk in events.chunks(1000) {
        let body: String = chunk.iter().map(|e| encode_event(e) + "\n").collect();
        let (status, v) = h.post_frame(body).await;
        ensure!(status == 202, "POST /events gave {status}: {v}");
        appended += v["appended"].as_u64().unwrap_or(0);
    }
    ensure!(appended as usize == events.len(), "appended {appended} of {}", events.len());

    let lift = h.state.site.lifts().next().unwrap().id.clone();
    let heartbeat = encode_event(&gen::heartbeat_at(&h.state.site, &lift, end.unix() - 1));
    let table = endpoints(heartbeat);
    let mut cells = 0;
    for e in &table {
        for caller in CALLERS {
            let (status, body) = call(&h, e, caller).await;
            let want = expected(e.access, e.ok, caller);
            ensure!(status == want, "{} as {caller:?}: {status}, expected {want}: {body}", e.name);
            if status == e.ok {
                valid_shape(e.name, &body)?;
            } else {
                ensure!(valid_error(&body), "{} as {caller:?}: error body {body}", e.name);
            }
            cells += 1;
        }
    }
    let (_, split) = h.get_json("/api/v1/analytics/mode-split?building=B8", Caller::Staff).await;
    ensure!(split["result"]["out_of_service"]["lift_seconds"].as_u64() == Some(5400), "B8 fault not visible: {split}");
    let (_, emergencies) = h.get_json("/api/v1/logs/emergency", Caller::Admin).await;
    ensure!(emergencies["count"].as_u64().is_some_and(|c| c > 0), "no emergency rows");
    Ok(format!("{} events ingested over HTTP; {} endpoints x 4 callers = {cells} cells match", events.len(), table.len()))
}

fn criterion_7() -> Outcome {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap().block_on(end_to_end())
}

fn served(site: &SiteConfig, lift: &str, t: i64, dir: Direction, wait: u32, level: i32) -> [LiftEvent; 2] {
    let lift: LiftId = lift.parse().unwrap();
    let mk = |t: i64, event_type, wait_time_s, door_status| {
        validate_event(
            RawEvent {
                lift: lift.clone(),
                occurred_at: Timestamp::from_unix(t),
                direction: dir,
                wait_time_s,
                operation_mode: OperationMode::Normal,
                event_type,
                floor_position: level,
                door_status,
            },
            site,
        )
        .unwrap()
    };
    [
        mk(t - i64::from(wait), EventType::HallCallRegistered, None, DoorStatus::Closed),
        mk(t, EventType::HallCallServed, Some(wait), DoorStatus::Opening),
    ]
}

fn criterion_8() -> Outcome {
    let site = fixture_site();
    let b8 = site.building("B8").unwrap();
    ensure!(b8.lift_travel_s_per_level == 4.0 && b8.door_dwell_s == 8.0, "fixture kinematics changed");
    let mut log = Vec::new();
    for (i, wait) in [20, 40, 25, 35].into_iter().enumerate() {
        log.extend(served(&site, &format!("B8-{}", i % 2 + 1), BASE + 600 * (i as i64 + 1), Direction::Up, wait, 1));
    }
    log.extend(served(&site, "B8-1", BASE + 4000, Direction::Down, 12, 9));
    let store = store_with(&log);
    let a = Analytics::new(&store, &site);
    let w = TimeWindow::new(Timestamp::from_unix(BASE), Timestamp::from_unix(BASE + 3600)).unwrap();

    let up = a.estimated_travel_time("B8", 1, 4, &w).map_err(|e| e.to_string())?;
    ensure!(up == Aggregate::Value(50.0), "1 -> 4: {up:?}, expected 30 + 3*4 + 8 = 50");
    let same = a.estimated_travel_time("B8", 4, 4, &w).map_err(|e| e.to_string())?;
    ensure!(same == Aggregate::Value(0.0), "4 -> 4: {same:?}");
    let down = a.estimated_travel_time("B8", 9, 2, &w).map_err(|e| e.to_string())?;
    ensure!(down == Aggregate::NoData, "no down calls in window: {down:?}");
    let later = TimeWindow::new(Timestamp::from_unix(BASE + 3600), Timestamp::from_unix(BASE + 7200)).unwrap();
    let down = a.estimated_travel_time("B8", 9, 2, &later).map_err(|e| e.to_string())?;
    ensure!(down == Aggregate::Value(12.0 + 7.0 * 4.0 + 8.0), "9 -> 2: {down:?}");
    ensure!(a.estimated_travel_time("B8", 1, 40, &w).is_err(), "unknown level accepted");
    Ok("30 + 3*4 + 8 = 50 s; from = to gives 0 s; empty direction gives NoData".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("analytics oracle equivalence", criterion_1),
        ("NoData discipline", criterion_2),
        ("planner optimality", criterion_3),
        ("notification exactly-once", criterion_4),
        ("watchdog", criterion_5),
        ("simulator determinism and conservation", criterion_6),
        ("end-to-end over HTTP", criterion_7),
        ("travel-time estimate", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail}) [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({why}) [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
