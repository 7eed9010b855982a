//! Fastest routes over lifts, escalators, stairs and bridges.
//!
//! Edge costs are frozen at query time and held as integer milliseconds, so
//! equal-cost paths compare exactly. Paths are ordered by
//! `(total, leg count, mode ranks, visited nodes, edge ids)`, each sequence
//! compared lexicographically. The order is total and preserved when two paths
//! are extended by the same edge, which lets a label-setting search return the
//! unique least path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{Aggregate, Analytics};
use crate::domain::{Direction, LiftId, QueryScope};
use crate::site::{EscalatorDirection, Location, PlannerDefaults, SiteConfig};
use crate::status::StatusBoard;
use crate::time::{TimeWindow, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Stairs,
    Escalator,
    Lift,
    Walk,
}

impl EdgeMode {
    /// Tie-break priority; lower wins.
    pub fn rank(self) -> u8 {
        match self {
            EdgeMode::Stairs => 0,
            EdgeMode::Escalator => 1,
            EdgeMode::Lift => 2,
            EdgeMode::Walk => 3,
        }
    }

    fn on_foot(self) -> bool {
        matches!(self, EdgeMode::Stairs | EdgeMode::Walk)
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub mode: EdgeMode,
    pub from: NodeId,
    pub to: NodeId,
    pub base_travel_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub serving_lift: Option<LiftId>,
    /// Door dwell added to lift legs.
    #[serde(skip_serializing_if = "is_zero")]
    pub door_dwell_s: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConnectivityReport {
    /// Number of weakly connected components.
    pub components: usize,
    /// Nodes with no incident edge.
    pub isolated: Vec<Location>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportGraph {
    nodes: Vec<Location>,
    index: HashMap<Location, NodeId>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
    defaults: PlannerDefaults,
}

impl TransportGraph {
    pub fn nodes(&self) -> &[Location] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, loc: &Location) -> Option<NodeId> {
        self.index.get(loc).copied()
    }

    pub fn location(&self, id: NodeId) -> &Location {
        &self.nodes[id]
    }

    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = (usize, &Edge)> {
        self.outgoing[node].iter().map(move |&e| (e, &self.edges[e]))
    }

    pub fn defaults(&self) -> &PlannerDefaults {
        &self.defaults
    }

    pub fn connectivity(&self) -> ConnectivityReport {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut degree = vec![0usize; n];
        for e in &self.edges {
            degree[e.from] += 1;
            degree[e.to] += 1;
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            parent[a] = b;
        }
        let components = (0..n).filter(|&x| find(&mut parent, x) == x).count();
        let isolated = (0..n).filter(|&x| degree[x] == 0).map(|x| self.nodes[x].clone()).collect();
        ConnectivityReport { components, isolated }
    }
}

/// Builds the static graph for a site. Isolated nodes are logged, not fatal.
pub fn build_graph(site: &SiteConfig) -> TransportGraph {
    let mut nodes: Vec<Location> = site
        .buildings()
        .flat_map(|b| b.levels().map(move |l| Location::new(b.code.clone(), l)))
        .collect();
    nodes.sort();
    let index: HashMap<Location, NodeId> = nodes.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
    let at = |b: &str, l: i32| index[&Location::new(b, l)];
    let defaults = site.planner().clone();
    let mut edges = Vec::new();

    for s in &site.document().stairs {
        let per = s.travel_s_per_level.unwrap_or(defaults.stairs_s_per_level);
        for l in s.from_level..s.to_level {
            for (a, b) in [(l, l + 1), (l + 1, l)] {
                edges.push(Edge {
                    mode: EdgeMode::Stairs,
                    from: at(&s.building, a),
                    to: at(&s.building, b),
                    base_travel_s: per,
                    serving_lift: None,
                    door_dwell_s: 0.0,
                });
            }
        }
    }
    for e in &site.document().escalators {
        let per = e.travel_s_per_level.unwrap_or(defaults.escalator_s_per_level);
        for l in e.from_level..e.to_level {
            let (a, b) = match e.direction {
                EscalatorDirection::Up => (l, l + 1),
                EscalatorDirection::Down => (l + 1, l),
            };
            edges.push(Edge {
                mode: EdgeMode::Escalator,
                from: at(&e.building, a),
                to: at(&e.building, b),
                base_travel_s: per,
                serving_lift: None,
                door_dwell_s: 0.0,
            });
        }
    }
    for lift in site.lifts() {
        let b = lift.id.building();
        for &a in &lift.serves {
            for &c in &lift.serves {
                if a == c {
                    continue;
                }
                edges.push(Edge {
                    mode: EdgeMode::Lift,
                    from: at(b, a),
                    to: at(b, c),
                    base_travel_s: f64::from((c - a).unsigned_abs()) * lift.travel_s_per_level,
                    serving_lift: Some(lift.id.clone()),
                    door_dwell_s: lift.door_dwell_s,
                });
            }
        }
    }
    for br in &site.document().bridges {
        let (a, b) = (index[&br.from], index[&br.to]);
        for (x, y) in [(a, b), (b, a)] {
            edges.push(Edge {
                mode: EdgeMode::Walk,
                from: x,
                to: y,
                base_travel_s: br.walk_s,
                serving_lift: None,
                door_dwell_s: 0.0,
            });
        }
    }

    let mut outgoing = vec![Vec::new(); nodes.len()];
    for (i, e) in edges.iter().enumerate() {
        outgoing[e.from].push(i);
    }
    let graph = TransportGraph { nodes, index, edges, outgoing, defaults };
    let report = graph.connectivity();
    for loc in &report.isolated {
        tracing::warn!(node = %loc, "node has no route edges");
    }
    graph
}

/// Historical mean wait for a lift call.
pub trait WaitSource {
    fn mean_wait_s(&self, building: &str, direction: Direction, window: &TimeWindow) -> Aggregate<f64>;
}

impl WaitSource for Analytics<'_> {
    fn mean_wait_s(&self, building: &str, direction: Direction, window: &TimeWindow) -> Aggregate<f64> {
        let stats = self.wait_time_stats(&QueryScope::Building(building.to_string()), window);
        let d = match direction {
            Direction::Up => stats.up,
            Direction::Down => stats.down,
            Direction::None => Aggregate::NoData,
        };
        d.map(|s| s.mean_s)
    }
}

/// A wait source with no history; every lift falls back to the default wait.
pub struct NoHistory;

impl WaitSource for NoHistory {
    fn mean_wait_s(&self, _: &str, _: Direction, _: &TimeWindow) -> Aggregate<f64> {
        Aggregate::NoData
    }
}

impl WaitSource for HashMap<(String, Direction), f64> {
    fn mean_wait_s(&self, building: &str, direction: Direction, _: &TimeWindow) -> Aggregate<f64> {
        match self.get(&(building.to_string(), direction)) {
            Some(&w) => Aggregate::Value(w),
            None => Aggregate::NoData,
        }
    }
}

/// Whether a lift may carry passengers right now.
pub trait LiftAvailability {
    fn is_working(&self, lift: &LiftId) -> bool;
}

impl LiftAvailability for StatusBoard {
    fn is_working(&self, lift: &LiftId) -> bool {
        self.mode_of(lift).is_some_and(|m| m.is_working())
    }
}

/// Every lift is available.
pub struct AllWorking;

impl LiftAvailability for AllWorking {
    fn is_working(&self, _: &LiftId) -> bool {
        true
    }
}

impl<F: Fn(&LiftId) -> bool> LiftAvailability for F {
    fn is_working(&self, lift: &LiftId) -> bool {
        self(lift)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteQuery {
    pub origin: Location,
    pub destination: Location,
    pub at: Timestamp,
    pub wait_window: TimeWindow,
}

impl RouteQuery {
    /// Query at `at` with the trailing-day wait window.
    pub fn new(origin: Location, destination: Location, at: Timestamp) -> Self {
        RouteQuery { origin, destination, at, wait_window: TimeWindow::trailing_day(at) }
    }
}

/// Cost of one edge, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeCost {
    Available { wait_ms: u64, travel_ms: u64 },
    Unavailable,
}

impl EdgeCost {
    pub fn total_ms(self) -> Option<u64> {
        match self {
            EdgeCost::Available { wait_ms, travel_ms } => Some(wait_ms + travel_ms),
            EdgeCost::Unavailable => None,
        }
    }
}

pub fn secs_to_ms(s: f64) -> u64 {
    (s * 1000.0).round().max(0.0) as u64
}

pub fn ms_to_secs(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

/// Stairs, escalators and bridges cost their base time. A lift costs its
/// expected wait plus travel plus door dwell, or is unavailable when its
/// serving lift is not working. Missing history falls back to the default wait.
pub fn edge_cost(
    graph: &TransportGraph,
    edge: &Edge,
    query: &RouteQuery,
    waits: &dyn WaitSource,
    lifts: &dyn LiftAvailability,
) -> EdgeCost {
    match (edge.mode, &edge.serving_lift) {
        (EdgeMode::Lift, Some(lift)) => {
            if !lifts.is_working(lift) {
                return EdgeCost::Unavailable;
            }
            let from = graph.location(edge.from);
            let to = graph.location(edge.to);
            let direction = Direction::between(from.level, to.level);
            let wait = waits
                .mean_wait_s(&from.building, direction, &query.wait_window)
                .value()
                .unwrap_or(graph.defaults.default_lift_wait_s);
            EdgeCost::Available {
                wait_ms: secs_to_ms(wait),
                travel_ms: secs_to_ms(edge.base_travel_s + edge.door_dwell_s),
            }
        }
        (EdgeMode::Lift, None) => EdgeCost::Unavailable,
        _ => EdgeCost::Available { wait_ms: 0, travel_ms: secs_to_ms(edge.base_travel_s) },
    }
}

/// Costs of every edge for one query.
pub fn cost_table(
    graph: &TransportGraph,
    query: &RouteQuery,
    waits: &dyn WaitSource,
    lifts: &dyn LiftAvailability,
) -> Vec<EdgeCost> {
    let mut memo: BTreeMap<(String, Direction), Aggregate<f64>> = BTreeMap::new();
    let cached = CachedWaits { inner: waits, memo: std::cell::RefCell::new(&mut memo) };
    graph.edges.iter().map(|e| edge_cost(graph, e, query, &cached, lifts)).collect()
}

struct CachedWaits<'a, 'm> {
    inner: &'a dyn WaitSource,
    memo: std::cell::RefCell<&'m mut BTreeMap<(String, Direction), Aggregate<f64>>>,
}

impl WaitSource for CachedWaits<'_, '_> {
    fn mean_wait_s(&self, building: &str, direction: Direction, window: &TimeWindow) -> Aggregate<f64> {
        let key = (building.to_string(), direction);
        if let Some(v) = self.memo.borrow().get(&key) {
            return *v;
        }
        let v = self.inner.mean_wait_s(building, direction, window);
        self.memo.borrow_mut().insert(key, v);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leg {
    pub mode: EdgeMode,
    pub from: Location,
    pub to: Location,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftId>,
    pub expected_wait_s: f64,
    pub travel_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StairsAdvisory {
    pub stairs_total_s: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutePlan {
    pub legs: Vec<Leg>,
    pub total_s: f64,
    /// Present when an on-foot route is within the advisory margin of the optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stairs_advisory: Option<StairsAdvisory>,
    #[serde(skip)]
    pub total_ms: u64,
    #[serde(skip)]
    pub edge_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("unknown node {0}")]
    UnknownNode(Location),
    #[error("no available route from {from} to {to}")]
    NoRoute { from: Location, to: Location },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::UnknownNode(_) => "unknown_node",
            PlanError::NoRoute { .. } => "no_route",
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Label {
    cost: u64,
    legs: usize,
    modes: Vec<u8>,
    nodes: Vec<NodeId>,
    edges: Vec<usize>,
    node: NodeId,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.cost, self.legs, &self.modes, &self.nodes, &self.edges).cmp(&(
            other.cost,
            other.legs,
            &other.modes,
            &other.nodes,
            &other.edges,
        ))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Least path under the total path order, restricted to edges with a cost and
/// accepted by `allow`. Returns `(cost_ms, edge ids)`.
fn least_path(
    graph: &TransportGraph,
    costs: &[EdgeCost],
    origin: NodeId,
    destination: NodeId,
    allow: impl Fn(&Edge) -> bool,
) -> Option<(u64, Vec<usize>)> {
    let n = graph.nodes.len();
    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let start = Label { cost: 0, legs: 0, modes: Vec::new(), nodes: Vec::new(), edges: Vec::new(), node: origin };
    best[origin] = Some(start.clone());
    heap.push(std::cmp::Reverse(start));

    while let Some(std::cmp::Reverse(label)) = heap.pop() {
        let u = label.node;
        if done[u] || best[u].as_ref() != Some(&label) {
            continue;
        }
        done[u] = true;
        if u == destination {
            return Some((label.cost, label.edges));
        }
        for (eid, edge) in graph.outgoing(u) {
            let Some(c) = costs[eid].total_ms() else { continue };
            if done[edge.to] || !allow(edge) {
                continue;
            }
            let extend = |v: &Vec<usize>, x: usize| {
                let mut v = v.clone();
                v.push(x);
                v
            };
            let mut modes = label.modes.clone();
            modes.push(edge.mode.rank());
            let next = Label {
                cost: label.cost + c,
                legs: label.legs + 1,
                modes,
                nodes: extend(&label.nodes, edge.to),
                edges: extend(&label.edges, eid),
                node: edge.to,
            };
            if best[edge.to].as_ref().is_none_or(|b| next < *b) {
                best[edge.to] = Some(next.clone());
                heap.push(std::cmp::Reverse(next));
            }
        }
    }
    None
}

/// Fastest available route. Ties go to fewer legs, then to the mode sequence
/// (stairs < escalator < lift < walk), then to the sequence of visited nodes.
pub fn plan_route(
    query: &RouteQuery,
    graph: &TransportGraph,
    waits: &dyn WaitSource,
    lifts: &dyn LiftAvailability,
) -> Result<RoutePlan, PlanError> {
    let origin = graph.node(&query.origin).ok_or_else(|| PlanError::UnknownNode(query.origin.clone()))?;
    let destination =
        graph.node(&query.destination).ok_or_else(|| PlanError::UnknownNode(query.destination.clone()))?;
    let costs = cost_table(graph, query, waits, lifts);
    plan_with_costs(graph, &costs, origin, destination)
}

/// Route search over a precomputed cost table.
pub fn plan_with_costs(
    graph: &TransportGraph,
    costs: &[EdgeCost],
    origin: NodeId,
    destination: NodeId,
) -> Result<RoutePlan, PlanError> {
    let no_route = || PlanError::NoRoute {
        from: graph.location(origin).clone(),
        to: graph.location(destination).clone(),
    };
    let (total_ms, edge_ids) = least_path(graph, costs, origin, destination, |_| true).ok_or_else(no_route)?;
    let legs: Vec<Leg> = edge_ids
        .iter()
        .map(|&e| {
            let edge = &graph.edges[e];
            let (wait_ms, travel_ms) = match costs[e] {
                EdgeCost::Available { wait_ms, travel_ms } => (wait_ms, travel_ms),
                EdgeCost::Unavailable => unreachable!("search only follows available edges"),
            };
            Leg {
                mode: edge.mode,
                from: graph.location(edge.from).clone(),
                to: graph.location(edge.to).clone(),
                lift: edge.serving_lift.clone(),
                expected_wait_s: ms_to_secs(wait_ms),
                travel_s: ms_to_secs(travel_ms),
            }
        })
        .collect();

    let margin = graph.defaults.stairs_advisory_margin;
    let stairs_advisory = if legs.iter().all(|l| l.mode.on_foot()) {
        None
    } else {
        least_path(graph, costs, origin, destination, |e| e.mode.on_foot())
            .filter(|&(foot_ms, _)| foot_ms as f64 <= total_ms as f64 * (1.0 + margin))
            .map(|(foot_ms, _)| StairsAdvisory { stairs_total_s: ms_to_secs(foot_ms), margin })
    };

    Ok(RoutePlan { legs, total_s: ms_to_secs(total_ms), stairs_advisory, total_ms, edge_ids })
}
