//! Text, CSV and JSON renderings of module results. Nothing here computes;
//! every number printed comes straight from the value passed in.

use serde_json::{json, Value};
use vt_core::analytics::{Aggregate, DirectionSplit, DirectionStats, HallCallCounts, ModeSplit, WaitTimeStats};
use vt_core::planner::{EdgeMode, RoutePlan};
use vt_core::wire::WireEvent;
use vt_core::{LiftEvent, Location, QueryScope, TimeWindow};

pub const NO_DATA: &str = "No Data Available";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stat {
    Mean,
    Max,
    Min,
}

impl Stat {
    fn column(self) -> &'static str {
        match self {
            Stat::Mean => "mean_s",
            Stat::Max => "max_s",
            Stat::Min => "min_s",
        }
    }

    fn pick(self, s: &DirectionStats) -> f64 {
        match self {
            Stat::Mean => s.mean_s,
            Stat::Max => f64::from(s.max_s),
            Stat::Min => f64::from(s.min_s),
        }
    }
}

/// Rows of cells, with `None` standing for a NoData cell.
struct Grid {
    headers: Vec<&'static str>,
    rows: Vec<Vec<Option<String>>>,
}

impl Grid {
    fn new(headers: &[&'static str]) -> Self {
        Grid { headers: headers.to_vec(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<Option<String>>) {
        self.rows.push(cells);
    }

    fn table(&self) -> String {
        let shown: Vec<Vec<&str>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| c.as_deref().unwrap_or(NO_DATA)).collect())
            .collect();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &shown {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[&str]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        for row in &shown {
            out.push_str(&line(row));
        }
        out
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.as_deref().unwrap_or(""))).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            _ => self.table(),
        }
    }
}

fn envelope(scope: &QueryScope, window: &TimeWindow, result: Value) -> String {
    let v = json!({ "scope": scope, "window": window, "result": result });
    serde_json::to_string_pretty(&v).expect("json value") + "\n"
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable result")
}

fn no_data_line() -> String {
    format!("{NO_DATA}\n")
}

pub fn wait_times(scope: &QueryScope, window: &TimeWindow, stats: &WaitTimeStats, stat: Option<Stat>, format: Format) -> String {
    let dirs = [("up", &stats.up), ("down", &stats.down)];
    if format == Format::Json {
        let result = match stat {
            None => to_json(stats),
            Some(s) => {
                let pick = |a: &Aggregate<DirectionStats>| to_json(&a.as_ref().map(|d| s.pick(d)));
                json!({ "stat": s.column(), "up": pick(&stats.up), "down": pick(&stats.down) })
            }
        };
        return envelope(scope, window, result);
    }
    if dirs.iter().all(|(_, a)| a.is_no_data()) {
        return no_data_line();
    }
    let mut grid = match stat {
        None => Grid::new(&["direction", "count", "mean_s", "max_s", "min_s"]),
        Some(s) => Grid::new(&["direction", s.column()]),
    };
    let mean = |m: f64| if format == Format::Table { format!("{m:.2}") } else { m.to_string() };
    for (name, agg) in dirs {
        let mut cells = vec![Some(name.to_string())];
        match (agg, stat) {
            (Aggregate::NoData, None) => cells.extend([None, None, None, None]),
            (Aggregate::NoData, Some(_)) => cells.push(None),
            (Aggregate::Value(d), None) => cells.extend([
                Some(d.count.to_string()),
                Some(mean(d.mean_s)),
                Some(d.max_s.to_string()),
                Some(d.min_s.to_string()),
            ]),
            (Aggregate::Value(d), Some(Stat::Mean)) => cells.push(Some(mean(d.mean_s))),
            (Aggregate::Value(d), Some(s)) => cells.push(Some(s.pick(d).to_string())),
        }
        grid.row(cells);
    }
    grid.render(format)
}

pub fn hall_calls(scope: &QueryScope, window: &TimeWindow, counts: &Aggregate<HallCallCounts>, format: Format) -> String {
    match (format, counts) {
        (Format::Json, _) => envelope(scope, window, to_json(counts)),
        (_, Aggregate::NoData) => no_data_line(),
        (_, Aggregate::Value(c)) => {
            let mut grid = Grid::new(&["direction", "count"]);
            grid.row(vec![Some("up".into()), Some(c.up.to_string())]);
            grid.row(vec![Some("down".into()), Some(c.down.to_string())]);
            grid.render(format)
        }
    }
}

pub fn direction_split(scope: &QueryScope, window: &TimeWindow, split: &Aggregate<DirectionSplit>, format: Format) -> String {
    match (format, split) {
        (Format::Json, _) => envelope(scope, window, to_json(split)),
        (_, Aggregate::NoData) => no_data_line(),
        (_, Aggregate::Value(d)) => {
            let mut grid = Grid::new(&["direction", "pct"]);
            grid.row(vec![Some("up".into()), Some(d.up_pct.to_string())]);
            grid.row(vec![Some("down".into()), Some(d.down_pct.to_string())]);
            grid.render(format)
        }
    }
}

pub fn mode_split(scope: &QueryScope, window: &TimeWindow, split: &Aggregate<ModeSplit>, format: Format) -> String {
    match (format, split) {
        (Format::Json, _) => envelope(scope, window, to_json(split)),
        (_, Aggregate::NoData) => no_data_line(),
        (_, Aggregate::Value(m)) => {
            let mut grid = Grid::new(&["mode", "pct", "lift_seconds"]);
            for (mode, pct) in &m.percent {
                grid.row(vec![Some(mode.to_string()), Some(pct.to_string()), Some(m.lift_seconds[mode].to_string())]);
            }
            grid.render(format)
        }
    }
}

pub fn event_log(kind: &str, scope: &QueryScope, window: &TimeWindow, rows: &[LiftEvent], format: Format) -> String {
    let wire: Vec<WireEvent> = rows.iter().map(WireEvent::from).collect();
    if format == Format::Json {
        let v = json!({ "kind": kind, "scope": scope, "window": window, "count": wire.len(), "rows": wire });
        return serde_json::to_string_pretty(&v).expect("json value") + "\n";
    }
    if wire.is_empty() && format == Format::Table {
        return no_data_line();
    }
    let mut grid = Grid::new(&[
        "lift_id",
        "occurred_time",
        "direction",
        "wait_time",
        "operation_mode_id",
        "event_type",
        "floor_position",
        "door_status",
    ]);
    for e in &wire {
        grid.row(vec![
            Some(e.lift_id.to_string()),
            Some(e.occurred_time.to_string()),
            Some(e.direction.to_string()),
            Some(e.wait_time.map(|w| w.to_string()).unwrap_or_default()),
            Some(e.operation_mode_id.to_string()),
            Some(e.event_type.to_string()),
            Some(e.floor_position.to_string()),
            Some(e.door_status.to_string()),
        ]);
    }
    grid.render(format)
}

pub fn travel(building: &str, from_level: i32, window: &TimeWindow, estimates: &[(i32, Aggregate<f64>)], format: Format) -> String {
    if format == Format::Json {
        let rows: Vec<Value> = estimates.iter().map(|(to, e)| json!({ "to_level": to, "estimate_s": e })).collect();
        let v = json!({ "building": building, "from_level": from_level, "window": window, "estimates": rows });
        return serde_json::to_string_pretty(&v).expect("json value") + "\n";
    }
    if estimates.iter().all(|(_, e)| e.is_no_data()) {
        return no_data_line();
    }
    let mut grid = Grid::new(&["from_level", "to_level", "estimate_s"]);
    for (to, e) in estimates {
        let shown = e.as_ref().value().map(|s| if format == Format::Table { format!("{s:.1}") } else { s.to_string() });
        grid.row(vec![Some(from_level.to_string()), Some(to.to_string()), shown]);
    }
    grid.render(format)
}

fn leg_line(from: &Location, to: &Location, mode: EdgeMode, lift: Option<String>, wait: f64, travel: f64) -> String {
    let how = match (mode, lift) {
        (EdgeMode::Lift, Some(l)) => format!("lift {l}, wait {wait:.1} s, ride {travel:.1} s"),
        (EdgeMode::Stairs, _) => format!("stairs, {travel:.1} s"),
        (EdgeMode::Escalator, _) => format!("escalator, {travel:.1} s"),
        (_, _) => format!("walk, {travel:.1} s"),
    };
    format!("  {from} -> {to}  {how}\n")
}

pub fn route(plan: &RoutePlan, format: Format) -> String {
    if format == Format::Json {
        return serde_json::to_string_pretty(plan).expect("json value") + "\n";
    }
    if plan.legs.is_empty() {
        return format!("already there, total {:.1} s\n", plan.total_s);
    }
    let mut out = String::new();
    for leg in &plan.legs {
        out.push_str(&leg_line(&leg.from, &leg.to, leg.mode, leg.lift.as_ref().map(|l| l.to_string()), leg.expected_wait_s, leg.travel_s));
    }
    out.push_str(&format!("total {:.1} s\n", plan.total_s));
    if let Some(a) = &plan.stairs_advisory {
        out.push_str(&format!(
            "on foot takes {:.1} s, within {:.0}% of the fastest route\n",
            a.stairs_total_s,
            a.margin * 100.0
        ));
    }
    out
}
