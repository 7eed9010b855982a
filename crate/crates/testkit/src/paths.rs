//! Exhaustive route search over simple paths, independent of the planner.
//!
//! Paths are enumerated depth-first. A branch is cut once its cost plus a
//! lower bound on the remaining distance cannot beat the best complete path.
//! The bound comes from Bellman-Ford relaxation; the enumeration must then
//! realise exactly that distance with a concrete simple path, so a faulty
//! bound shows up as a disagreement rather than a silent pass.

use std::collections::VecDeque;

use vt_core::planner::{EdgeCost, NodeId, TransportGraph};

type Adjacency = Vec<Vec<(NodeId, u64)>>;

/// Parallel edges are collapsed to their cheapest available member, so every
/// node sequence is visited once.
fn adjacency(graph: &TransportGraph, costs: &[EdgeCost]) -> Adjacency {
    let mut adj: Adjacency = vec![Vec::new(); graph.nodes().len()];
    for (e, edge) in graph.edges().iter().enumerate() {
        let Some(c) = costs[e].total_ms() else { continue };
        match adj[edge.from].iter_mut().find(|(v, _)| *v == edge.to) {
            Some(slot) => slot.1 = slot.1.min(c),
            None => adj[edge.from].push((edge.to, c)),
        }
    }
    adj
}

fn relax_to(adj: &Adjacency, to: NodeId) -> Vec<Option<u64>> {
    let mut dist = vec![None; adj.len()];
    dist[to] = Some(0u64);
    for _ in 0..adj.len() {
        let mut changed = false;
        for (u, list) in adj.iter().enumerate() {
            for &(v, c) in list {
                if let Some(dv) = dist[v] {
                    if dist[u].is_none_or(|du| c + dv < du) {
                        dist[u] = Some(c + dv);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Cheapest simple path cost in milliseconds, or `None` if unreachable.
///
/// Panics if the enumeration and the relaxation disagree.
pub fn cheapest_simple_path(graph: &TransportGraph, costs: &[EdgeCost], from: NodeId, to: NodeId) -> Option<u64> {
    let mut adj = adjacency(graph, costs);
    let bound = relax_to(&adj, to);
    let reachable = reachable_from(&adj, from);
    assert_eq!(bound[from].is_some(), reachable[to], "relaxation and search disagree on reachability");
    bound[from]?;
    for list in &mut adj {
        list.sort_by_key(|&(v, c)| (bound[v].map(|b| b + c), v));
    }
    let mut best = None;
    let mut on_path = vec![false; adj.len()];
    on_path[from] = true;
    dfs(&adj, &|v| bound[v], from, to, 0, &mut on_path, &mut best);
    assert_eq!(best, bound[from], "enumeration did not realise the relaxed distance");
    best
}

/// Plain enumeration with only the best-so-far cut. Exponential; for small
/// graphs only.
pub fn cheapest_simple_path_unbounded(
    graph: &TransportGraph,
    costs: &[EdgeCost],
    from: NodeId,
    to: NodeId,
) -> Option<u64> {
    let adj = adjacency(graph, costs);
    let mut best = None;
    let mut on_path = vec![false; adj.len()];
    on_path[from] = true;
    dfs(&adj, &|_| Some(0), from, to, 0, &mut on_path, &mut best);
    best
}

fn reachable_from(adj: &Adjacency, from: NodeId) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

fn dfs(
    adj: &Adjacency,
    bound: &dyn Fn(NodeId) -> Option<u64>,
    at: NodeId,
    to: NodeId,
    cost: u64,
    on_path: &mut [bool],
    best: &mut Option<u64>,
) {
    let Some(rest) = bound(at) else { return };
    if best.is_some_and(|b| cost + rest >= b) {
        return;
    }
    if at == to {
        *best = Some(cost);
        return;
    }
    for &(v, c) in &adj[at] {
        if on_path[v] {
            continue;
        }
        on_path[v] = true;
        dfs(adj, bound, v, to, cost + c, on_path, best);
        on_path[v] = false;
    }
}

/// Total cost of a path given as edge ids, checking it is connected and simple.
pub fn path_cost(graph: &TransportGraph, costs: &[EdgeCost], from: NodeId, edges: &[usize]) -> Option<u64> {
    let mut at = from;
    let mut seen = vec![at];
    let mut total = 0;
    for &e in edges {
        let edge = &graph.edges()[e];
        if edge.from != at || seen.contains(&edge.to) {
            return None;
        }
        total += costs[e].total_ms()?;
        at = edge.to;
        seen.push(at);
    }
    Some(total)
}
