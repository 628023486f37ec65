//! Exact maximum flows on expanded graphs and residual-graph queries.
//!
//! Capacities are rescaled by the least common multiple of their
//! denominators, so the solver runs on integers and every result converts
//! back to an exact [`Quantity`].

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ExpandedGraph, SINK, SOURCE};
use crate::quantity::{common_denominator, Quantity};

/// An s-t flow on an [`ExpandedGraph`], indexed by edge id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flow {
    pub values: Vec<Quantity>,
    pub value: Quantity,
}

impl Flow {
    pub fn zero(graph: &ExpandedGraph) -> Flow {
        Flow { values: vec![Quantity::ZERO; graph.edges().len()], value: Quantity::ZERO }
    }

    pub fn on(&self, edge: usize) -> Quantity {
        self.values[edge]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaxFlow {
    pub flow: Flow,
    /// Edges leaving the source side of the final residual graph. Their
    /// capacities add up to the flow value.
    pub min_cut: Vec<usize>,
}

impl MaxFlow {
    pub fn value(&self) -> Quantity {
        self.flow.value
    }

    pub fn cut_capacity(&self, graph: &ExpandedGraph) -> Quantity {
        self.min_cut.iter().map(|&e| graph.edge(e).capacity).sum()
    }
}

/// Integer residual network. Arc `2i` is the forward arc of edge `i`, arc
/// `2i + 1` its reverse.
#[derive(Debug, Clone)]
pub(crate) struct Residual {
    source: usize,
    sink: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    capacity: Vec<i64>,
    residual: Vec<i64>,
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

impl Residual {
    pub(crate) fn new(nodes: usize, source: usize, sink: usize, edges: &[(usize, usize)]) -> Self {
        let mut degree = vec![0usize; nodes + 1];
        for &(u, v) in edges {
            degree[u + 1] += 1;
            degree[v + 1] += 1;
        }
        for i in 0..nodes {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut adjacency = vec![0; 2 * edges.len()];
        for (i, &(u, v)) in edges.iter().enumerate() {
            adjacency[fill[u]] = 2 * i;
            fill[u] += 1;
            adjacency[fill[v]] = 2 * i + 1;
            fill[v] += 1;
        }
        Residual {
            source,
            sink,
            tails: edges.iter().map(|e| e.0).collect(),
            heads: edges.iter().map(|e| e.1).collect(),
            capacity: vec![0; edges.len()],
            residual: vec![0; 2 * edges.len()],
            offsets,
            adjacency,
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    pub(crate) fn from_graph(graph: &ExpandedGraph, scale: i64) -> Self {
        let pairs: Vec<_> = graph.edges().iter().map(|e| (e.tail, e.head)).collect();
        let mut net = Residual::new(graph.nodes().len(), SOURCE, SINK, &pairs);
        let caps: Vec<i64> = graph.edges().iter().map(|e| e.capacity.scaled_integer(scale)).collect();
        net.reset(&caps);
        net
    }

    /// Loads capacities and clears the flow.
    pub(crate) fn reset(&mut self, capacities: &[i64]) {
        debug_assert_eq!(capacities.len(), self.capacity.len());
        self.capacity.copy_from_slice(capacities);
        for (i, &c) in capacities.iter().enumerate() {
            self.residual[2 * i] = c;
            self.residual[2 * i + 1] = 0;
        }
    }

    /// Loads a given flow on top of the current capacities.
    pub(crate) fn load_flow(&mut self, flows: &[i64]) {
        for (i, &f) in flows.iter().enumerate() {
            self.residual[2 * i] = self.capacity[i] - f;
            self.residual[2 * i + 1] = f;
        }
    }

    pub(crate) fn capacity(&self, edge: usize) -> i64 {
        self.capacity[edge]
    }

    pub(crate) fn flow(&self, edge: usize) -> i64 {
        self.residual[2 * edge + 1]
    }

    fn arc_head(&self, arc: usize) -> usize {
        if arc.is_multiple_of(2) {
            self.heads[arc / 2]
        } else {
            self.tails[arc / 2]
        }
    }

    fn bfs_levels(&mut self) -> bool {
        self.level.fill(u32::MAX);
        let mut queue = VecDeque::new();
        self.level[self.source] = 0;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.adjacency[self.offsets[u]..self.offsets[u + 1]] {
                let v = self.arc_head(arc);
                if self.residual[arc] > 0 && self.level[v] == u32::MAX {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[self.sink] != u32::MAX
    }

    fn augment(&mut self, u: usize, limit: i64) -> i64 {
        if u == self.sink {
            return limit;
        }
        while self.cursor[u] < self.offsets[u + 1] {
            let arc = self.adjacency[self.cursor[u]];
            let v = self.arc_head(arc);
            if self.residual[arc] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.augment(v, limit.min(self.residual[arc]));
                if pushed > 0 {
                    self.residual[arc] -= pushed;
                    self.residual[arc ^ 1] += pushed;
                    return pushed;
                }
            }
            self.cursor[u] += 1;
        }
        0
    }

    /// Dinic's algorithm from the current flow. Returns the total flow value.
    pub(crate) fn run(&mut self) -> i64 {
        while self.bfs_levels() {
            let n = self.cursor.len();
            self.cursor.copy_from_slice(&self.offsets[..n]);
            while self.augment(self.source, i64::MAX) > 0 {}
        }
        self.value()
    }

    pub(crate) fn value(&self) -> i64 {
        let s = self.source;
        self.adjacency[self.offsets[s]..self.offsets[s + 1]]
            .iter()
            .map(|&arc| if arc % 2 == 0 { self.residual[arc + 1] } else { -self.residual[arc] })
            .sum()
    }

    /// Nodes reachable from `from` along arcs with positive residual capacity.
    /// With `parents`, records the arc used to enter each node.
    fn reach(&self, from: usize, target: Option<usize>, mut parents: Option<&mut Vec<usize>>) -> Vec<bool> {
        let mut seen = vec![false; self.level.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.adjacency[self.offsets[u]..self.offsets[u + 1]] {
                let v = self.arc_head(arc);
                if self.residual[arc] > 0 && !seen[v] {
                    seen[v] = true;
                    if let Some(p) = parents.as_deref_mut() {
                        p[v] = arc;
                    }
                    if Some(v) == target {
                        return seen;
                    }
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub(crate) fn source_side(&self) -> Vec<bool> {
        self.reach(self.source, None, None)
    }

    /// True iff every maximum flow saturates `edge`, assuming the loaded flow
    /// is maximum. A saturated edge can be unloaded exactly when its tail
    /// reaches its head in the residual graph: that path plus the reverse arc
    /// is a cycle along which flow can be shifted off the edge.
    pub(crate) fn saturated_in_every_max_flow(&self, edge: usize) -> bool {
        let cap = self.capacity[edge];
        if cap == 0 {
            return true;
        }
        if self.flow(edge) < cap {
            return false;
        }
        let (tail, head) = (self.tails[edge], self.heads[edge]);
        !self.reach(tail, Some(head), None)[head]
    }

    /// Pushes flow around a residual cycle through the reverse arc of `edge`,
    /// keeping the flow value. Returns the amount removed from `edge` (0 if no
    /// such cycle exists).
    pub(crate) fn shift_off(&mut self, edge: usize) -> i64 {
        let (tail, head) = (self.tails[edge], self.heads[edge]);
        let mut parents = vec![usize::MAX; self.level.len()];
        if !self.reach(tail, Some(head), Some(&mut parents))[head] {
            return 0;
        }
        let mut path = Vec::new();
        let mut v = head;
        while v != tail {
            let arc = parents[v];
            path.push(arc);
            v = if arc % 2 == 0 { self.tails[arc / 2] } else { self.heads[arc / 2] };
        }
        let amount = path.iter().map(|&a| self.residual[a]).min().unwrap_or(i64::MAX).min(self.flow(edge));
        for arc in path {
            self.residual[arc] -= amount;
            self.residual[arc ^ 1] += amount;
        }
        self.residual[2 * edge + 1] -= amount;
        self.residual[2 * edge] += amount;
        amount
    }
}

/// Least common multiple of all capacity denominators of `graph`.
pub fn capacity_scale(graph: &ExpandedGraph) -> i64 {
    common_denominator(graph.edges().iter().map(|e| &e.capacity))
}

/// The smallest capacity step that the integer rescaling resolves exactly.
pub fn unit_quantum(graph: &ExpandedGraph) -> Quantity {
    Quantity::new(1, capacity_scale(graph))
}

fn to_flow(net: &Residual, edges: usize, scale: i64) -> Flow {
    Flow {
        values: (0..edges).map(|i| Quantity::new(net.flow(i), scale)).collect(),
        value: Quantity::new(net.value(), scale),
    }
}

fn cut_edges(net: &Residual, graph: &ExpandedGraph) -> Vec<usize> {
    let side = net.source_side();
    graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| side[e.tail] && !side[e.head] && e.capacity.is_positive())
        .map(|(i, _)| i)
        .collect()
}

/// Computes a maximum flow and a minimum cut certifying it.
///
/// The flow is deterministic for a fixed edge order.
pub fn max_flow(graph: &ExpandedGraph) -> MaxFlow {
    let scale = capacity_scale(graph);
    let mut net = Residual::from_graph(graph, scale);
    net.run();
    MaxFlow { flow: to_flow(&net, graph.edges().len(), scale), min_cut: cut_edges(&net, graph) }
}

fn check_feasible(graph: &ExpandedGraph, flow: &Flow) -> Result<()> {
    if flow.values.len() != graph.edges().len() {
        return Err(Error::Shape(format!("flow has {} values for {} edges", flow.values.len(), graph.edges().len())));
    }
    let mut balance = vec![Quantity::ZERO; graph.nodes().len()];
    for (i, (e, f)) in graph.edges().iter().zip(&flow.values).enumerate() {
        if f.is_negative() || *f > e.capacity {
            return Err(Error::InfeasibleFlow(format!(
                "the capacity constraint on edge {i} ({} -> {}): {f} not in [0, {}]",
                graph.node_label(e.tail),
                graph.node_label(e.head),
                e.capacity
            )));
        }
        balance[e.tail] -= *f;
        balance[e.head] += *f;
    }
    for (v, b) in balance.iter().enumerate() {
        if v != SOURCE && v != SINK && !b.is_zero() {
            return Err(Error::InfeasibleFlow(format!("conservation at {} (imbalance {b})", graph.node_label(v))));
        }
    }
    if -balance[SOURCE] != flow.value || balance[SINK] != flow.value {
        return Err(Error::InfeasibleFlow(format!(
            "the declared value {} (source emits {}, sink absorbs {})",
            flow.value, -balance[SOURCE], balance[SINK]
        )));
    }
    Ok(())
}

fn load(graph: &ExpandedGraph, flow: &Flow) -> Residual {
    let scale = common_denominator(graph.edges().iter().map(|e| &e.capacity).chain(&flow.values));
    let mut net = Residual::from_graph(graph, scale);
    let flows: Vec<i64> = flow.values.iter().map(|f| f.scaled_integer(scale)).collect();
    net.load_flow(&flows);
    net
}

/// Checks that `flow` is feasible and maximum. Returns the minimum cut
/// separating the residual source side, whose capacity equals `|flow|`.
pub fn certify_max_flow(graph: &ExpandedGraph, flow: &Flow) -> Result<Vec<usize>> {
    check_feasible(graph, flow)?;
    let net = load(graph, flow);
    if net.source_side()[SINK] {
        return Err(Error::NotMaximal("an augmenting path from x to y exists".into()));
    }
    let cut = cut_edges(&net, graph);
    let capacity: Quantity = cut.iter().map(|&e| graph.edge(e).capacity).sum();
    if capacity != flow.value {
        return Err(Error::NotMaximal(format!("cut capacity {capacity} differs from flow value {}", flow.value)));
    }
    Ok(cut)
}

/// Whether every maximum flow of `graph` saturates `edge`, decided from a
/// single maximum flow by residual reachability. Zero-capacity edges are
/// trivially saturated.
pub fn saturated_in_all_max_flows(graph: &ExpandedGraph, flow: &Flow, edge: usize) -> Result<bool> {
    certify_max_flow(graph, flow)?;
    Ok(load(graph, flow).saturated_in_every_max_flow(edge))
}

/// Maximum-flow value after lowering the capacity of `edge` by `delta`.
pub fn max_flow_value_with_reduced_capacity(graph: &ExpandedGraph, edge: usize, delta: Quantity) -> Result<Quantity> {
    let capacity = graph.edge(edge).capacity;
    if !delta.is_positive() || delta > capacity {
        return Err(Error::ReductionOutOfRange { delta, capacity });
    }
    Ok(max_flow(&graph.with_capacity(edge, capacity - delta)).value())
}

/// Independent admissibility test: `edge` is saturated by every maximum flow
/// iff lowering its capacity by one rescaling unit lowers the maximum-flow
/// value. The maximum-flow value is piecewise linear in one capacity with
/// breakpoints on that unit grid, so one unit is as good as any `ε`.
pub fn saturated_by_capacity_reduction(graph: &ExpandedGraph, edge: usize) -> bool {
    if graph.edge(edge).capacity.is_zero() {
        return true;
    }
    let full = max_flow(graph).value();
    let reduced = max_flow_value_with_reduced_capacity(graph, edge, unit_quantum(graph))
        .expect("one unit never exceeds a positive capacity on the unit grid");
    reduced < full
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{paper_instance, PaperInstanceId};
    use crate::model::{apply_strategy, build_expanded_graph, StrategyProfile};

    fn graph_of(id: PaperInstanceId) -> ExpandedGraph {
        build_expanded_graph(&paper_instance(id).unwrap().0).unwrap()
    }

    fn fig2(profile: &[&[i64]]) -> ExpandedGraph {
        let g = graph_of(PaperInstanceId::Fig2FlowExample);
        apply_strategy(&g, &StrategyProfile::from_integers(profile)).unwrap()
    }

    #[test]
    fn small_network() {
        let mut net = Residual::new(4, 0, 3, &[(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)]);
        net.reset(&[3, 2, 2, 3, 5]);
        assert_eq!(net.run(), 5);
        // rerunning on a maximum flow adds nothing
        assert_eq!(net.run(), 5);
    }

    #[test]
    fn relaxed_paper_values() {
        assert_eq!(max_flow(&graph_of(PaperInstanceId::Fig1Structure)).value(), Quantity::ONE);
        assert_eq!(max_flow(&graph_of(PaperInstanceId::Fig3T2Poa)).value(), Quantity::from_integer(2));
        assert_eq!(max_flow(&graph_of(PaperInstanceId::Fig4NoNe)).value(), Quantity::new(5, 2));
    }

    #[test]
    fn zero_demand_gives_zero_flow() {
        let mut inst = paper_instance(PaperInstanceId::Fig3T2Poa).unwrap().0;
        inst.demands.clear();
        let g = build_expanded_graph(&inst).unwrap();
        let mf = max_flow(&g);
        assert!(mf.value().is_zero());
        assert!(mf.min_cut.is_empty());
    }

    #[test]
    fn flow_is_certified_by_its_cut() {
        for id in PaperInstanceId::suite() {
            let g = graph_of(id);
            let mf = max_flow(&g);
            assert_eq!(certify_max_flow(&g, &mf.flow).unwrap(), mf.min_cut);
            assert_eq!(mf.cut_capacity(&g), mf.value());
        }
    }

    #[test]
    fn fig2c_saturation() {
        let g = fig2(&[&[1, -1], &[1, -1], &[1, -1]]);
        let mf = max_flow(&g);
        assert_eq!(mf.value(), Quantity::from_integer(2));
        let a = g.charge_edge(0, 0);
        let c = g.charge_edge(2, 0);
        assert!(!saturated_in_all_max_flows(&g, &mf.flow, a).unwrap());
        assert!(saturated_in_all_max_flows(&g, &mf.flow, c).unwrap());
        // zero-capacity edges are vacuously saturated
        let idle = g.charge_edge(0, 1);
        assert!(g.edge(idle).capacity.is_zero());
        assert!(saturated_in_all_max_flows(&g, &mf.flow, idle).unwrap());
    }

    #[test]
    fn capacity_reduction_examples() {
        let d = fig2(&[&[0, 0], &[1, -1], &[1, -1]]);
        let b = d.charge_edge(1, 0);
        assert_eq!(max_flow(&d).value(), Quantity::from_integer(2));
        assert_eq!(max_flow_value_with_reduced_capacity(&d, b, Quantity::ONE).unwrap(), Quantity::ONE);
        assert!(saturated_by_capacity_reduction(&d, b));

        let c = fig2(&[&[1, -1], &[1, -1], &[1, -1]]);
        let a = c.charge_edge(0, 0);
        assert_eq!(max_flow_value_with_reduced_capacity(&c, a, Quantity::ONE).unwrap(), Quantity::from_integer(2));
        assert!(!saturated_by_capacity_reduction(&c, a));
    }

    #[test]
    fn reduction_out_of_range() {
        let d = fig2(&[&[0, 0], &[1, -1], &[1, -1]]);
        let b = d.charge_edge(1, 0);
        assert!(max_flow_value_with_reduced_capacity(&d, b, Quantity::ZERO).is_err());
        assert!(max_flow_value_with_reduced_capacity(&d, b, Quantity::from_integer(2)).is_err());
        let idle = d.charge_edge(0, 0);
        assert!(max_flow_value_with_reduced_capacity(&d, idle, Quantity::ONE).is_err());
    }

    #[test]
    fn non_maximal_flow_rejected() {
        let g = fig2(&[&[0, 0], &[1, -1], &[1, -1]]);
        let zero = Flow::zero(&g);
        assert!(matches!(saturated_in_all_max_flows(&g, &zero, 0), Err(Error::NotMaximal(_))));
    }

    #[test]
    fn infeasible_flow_rejected() {
        let g = fig2(&[&[0, 0], &[1, -1], &[1, -1]]);
        let mut f = max_flow(&g).flow;
        let e = g.charge_edge(1, 0);
        f.values[e] = Quantity::from_integer(5);
        assert!(matches!(certify_max_flow(&g, &f), Err(Error::InfeasibleFlow(_))));
        let mut f = max_flow(&g).flow;
        f.values[e] = Quantity::ZERO;
        assert!(matches!(certify_max_flow(&g, &f), Err(Error::InfeasibleFlow(_))));
    }

    #[test]
    fn shift_off_keeps_value() {
        let g = fig2(&[&[1, -1], &[1, -1], &[1, -1]]);
        let mut net = Residual::from_graph(&g, 1);
        let value = net.run();
        let a = g.charge_edge(0, 0);
        let b = g.charge_edge(1, 0);
        let used = if net.flow(a) > 0 { a } else { b };
        assert_eq!(net.shift_off(used), 1);
        assert_eq!(net.value(), value);
        assert_eq!(net.flow(used), 0);
        assert!(!net.source_side()[SINK]);
    }
}
