//! Test-only oracles, written without the library's solver or grid code.

#![allow(dead_code)]

use std::collections::VecDeque;

use chargegame::model::{check_strategy, ExpandedGraph, SINK, SOURCE};
use chargegame::{Instance, Quantity};

/// Edmonds-Karp on rationals over an adjacency matrix. Slow and plain.
pub fn max_flow_value(graph: &ExpandedGraph) -> Quantity {
    let n = graph.nodes().len();
    let mut residual = vec![vec![Quantity::ZERO; n]; n];
    for e in graph.edges() {
        residual[e.tail][e.head] += e.capacity;
    }
    let mut total = Quantity::ZERO;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[SOURCE] = SOURCE;
        let mut queue = VecDeque::from([SOURCE]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && residual[u][v].is_positive() {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[SINK] == usize::MAX {
            return total;
        }
        let mut bottleneck: Option<Quantity> = None;
        let mut v = SINK;
        while v != SOURCE {
            let u = parent[v];
            bottleneck = Some(bottleneck.map_or(residual[u][v], |b| b.min(residual[u][v])));
            v = u;
        }
        let push = bottleneck.unwrap();
        let mut v = SINK;
        while v != SOURCE {
            let u = parent[v];
            residual[u][v] -= push;
            residual[v][u] += push;
            v = u;
        }
        total += push;
    }
}

/// Admissibility of one edge by definition-level reasoning: lowering its
/// capacity by a tiny amount lowers the maximum flow iff every maximum flow
/// saturates it. `eps` must be below the gap between breakpoints.
pub fn edge_forced(graph: &ExpandedGraph, edge: usize, eps: Quantity) -> bool {
    let cap = graph.edge(edge).capacity;
    if cap.is_zero() {
        return true;
    }
    let full = max_flow_value(graph);
    let reduced = max_flow_value(&graph.with_capacity(edge, cap - eps.min(cap)));
    reduced < full
}

/// Per-agent admissibility of a strategy-capacitated graph.
pub fn agent_verdicts(graph: &ExpandedGraph, eps: Quantity) -> Vec<bool> {
    (0..graph.agent_count())
        .map(|b| {
            (0..graph.horizon()).all(|t| {
                edge_forced(graph, graph.charge_edge(b, t), eps) && edge_forced(graph, graph.discharge_edge(b, t), eps)
            })
        })
        .collect()
}

/// All vectors with entries in `g·{-m..=m}` that pass the feasibility check
/// and do not charge in the last step, in lexicographic order.
pub fn brute_force_grid(instance: &Instance, agent: usize, g: Quantity) -> Vec<Vec<Quantity>> {
    let a = &instance.agents[agent];
    let m = a.battery_capacity.iter().map(|c| c.floor_div(g)).max().unwrap_or(0);
    let horizon = instance.horizon;
    let values: Vec<i64> = (-m..=m).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; horizon];
    loop {
        let s: Vec<Quantity> = idx.iter().map(|&i| g * values[i]).collect();
        let last_ok = s.last().is_none_or(|v| !v.is_positive());
        if last_ok && check_strategy(&a.id, &s, &a.battery_capacity).is_ok() {
            out.push(s);
        }
        let mut j = horizon;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < values.len() {
                break;
            }
            idx[j] = 0;
        }
    }
}
