//! Instances of the charging game and the time-expanded energy network.
//!
//! Time steps are 0-based in code (`0..horizon`) and 1-based in every
//! human-facing message and label.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::Quantity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostEdge {
    pub id: String,
    pub from: String,
    pub to: String,
    /// One value per time step.
    pub capacity: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    pub location: String,
    /// Capacity of the battery edge between step `t` and `t + 1`, one value
    /// per step except the last.
    pub battery_capacity: Vec<Quantity>,
}

/// A host grid over `horizon` time steps with per-step supplies/demands and
/// battery agents. Nodes missing from `demands` have zero demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub horizon: usize,
    pub nodes: Vec<String>,
    pub edges: Vec<HostEdge>,
    pub demands: BTreeMap<String, Vec<Quantity>>,
    pub agents: Vec<Agent>,
}

/// One broken instance invariant. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    ZeroHorizon,
    DuplicateNode { node: String },
    DuplicateEdge { edge: String },
    DuplicateAgent { agent: String },
    UnknownEndpoint { edge: String, node: String },
    UnknownDemandNode { node: String },
    UnknownLocation { agent: String, node: String },
    SharedLocation { node: String, agents: (String, String) },
    WrongLength { entity: String, expected: usize, found: usize },
    NegativeCapacity { entity: String, step: usize, value: Quantity },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroHorizon => write!(f, "horizon T must be at least 1"),
            Violation::DuplicateNode { node } => write!(f, "duplicate node id `{node}`"),
            Violation::DuplicateEdge { edge } => write!(f, "duplicate edge id `{edge}`"),
            Violation::DuplicateAgent { agent } => write!(f, "duplicate agent id `{agent}`"),
            Violation::UnknownEndpoint { edge, node } => {
                write!(f, "edge `{edge}`: unknown endpoint `{node}`")
            }
            Violation::UnknownDemandNode { node } => write!(f, "demands: unknown node `{node}`"),
            Violation::UnknownLocation { agent, node } => {
                write!(f, "agent `{agent}`: unknown location `{node}`")
            }
            Violation::SharedLocation { node, agents } => {
                write!(f, "node `{node}` hosts two agents (`{}`, `{}`)", agents.0, agents.1)
            }
            Violation::WrongLength { entity, expected, found } => {
                write!(f, "{entity}: expected {expected} values, found {found}")
            }
            Violation::NegativeCapacity { entity, step, value } => {
                write!(f, "{entity}: capacity < 0 at step {step} ({value})")
            }
        }
    }
}

impl Instance {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    /// `d(v, t)`; zero for nodes without an entry.
    pub fn demand(&self, node: &str, step: usize) -> Quantity {
        self.demands.get(node).and_then(|d| d.get(step)).copied().unwrap_or(Quantity::ZERO)
    }

    /// `Σ_v d(v, t)`.
    pub fn net_supply(&self, step: usize) -> Quantity {
        self.nodes.iter().map(|v| self.demand(v, step)).sum()
    }

    /// `Σ_{v,t} max(0, d(v, t))`, the bound no s-t flow can exceed.
    pub fn total_supply(&self) -> Quantity {
        self.demands.values().flatten().map(|d| (*d).max(Quantity::ZERO)).sum()
    }

    /// Multiplies every demand and capacity by `factor`.
    pub fn scaled(&self, factor: Quantity) -> Instance {
        let scale = |v: &Vec<Quantity>| v.iter().map(|x| *x * factor).collect::<Vec<_>>();
        Instance {
            horizon: self.horizon,
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|e| HostEdge { capacity: scale(&e.capacity), ..e.clone() }).collect(),
            demands: self.demands.iter().map(|(k, v)| (k.clone(), scale(v))).collect(),
            agents: self
                .agents
                .iter()
                .map(|a| Agent { battery_capacity: scale(&a.battery_capacity), ..a.clone() })
                .collect(),
        }
    }
}

/// Checks every instance invariant and lists the violations found.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = instance.horizon;
    if horizon == 0 {
        out.push(Violation::ZeroHorizon);
    }

    let mut nodes = HashSet::new();
    for node in &instance.nodes {
        if !nodes.insert(node.as_str()) {
            out.push(Violation::DuplicateNode { node: node.clone() });
        }
    }

    let check_values =
        |out: &mut Vec<Violation>, entity: String, values: &[Quantity], expected: usize, nonneg: bool| {
            if values.len() != expected {
                out.push(Violation::WrongLength { entity: entity.clone(), expected, found: values.len() });
            }
            if nonneg {
                for (t, v) in values.iter().enumerate() {
                    if v.is_negative() {
                        out.push(Violation::NegativeCapacity { entity: entity.clone(), step: t + 1, value: *v });
                    }
                }
            }
        };

    let mut edge_ids = HashSet::new();
    for edge in &instance.edges {
        if !edge_ids.insert(edge.id.as_str()) {
            out.push(Violation::DuplicateEdge { edge: edge.id.clone() });
        }
        for end in [&edge.from, &edge.to] {
            if !nodes.contains(end.as_str()) {
                out.push(Violation::UnknownEndpoint { edge: edge.id.clone(), node: end.clone() });
            }
        }
        check_values(&mut out, format!("edge `{}`", edge.id), &edge.capacity, horizon, true);
    }

    for (node, values) in &instance.demands {
        if !nodes.contains(node.as_str()) {
            out.push(Violation::UnknownDemandNode { node: node.clone() });
        }
        check_values(&mut out, format!("demands of `{node}`"), values, horizon, false);
    }

    let mut agent_ids = HashSet::new();
    let mut hosts: HashMap<&str, &str> = HashMap::new();
    for agent in &instance.agents {
        if !agent_ids.insert(agent.id.as_str()) {
            out.push(Violation::DuplicateAgent { agent: agent.id.clone() });
        }
        if !nodes.contains(agent.location.as_str()) {
            out.push(Violation::UnknownLocation { agent: agent.id.clone(), node: agent.location.clone() });
        } else if let Some(other) = hosts.insert(agent.location.as_str(), agent.id.as_str()) {
            out.push(Violation::SharedLocation {
                node: agent.location.clone(),
                agents: (other.to_string(), agent.id.clone()),
            });
        }
        check_values(
            &mut out,
            format!("battery of `{}`", agent.id),
            &agent.battery_capacity,
            horizon.saturating_sub(1),
            true,
        );
    }
    out
}

pub fn ensure_valid(instance: &Instance) -> Result<()> {
    let violations = validate_instance(instance);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInstance(violations))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NodeKind {
    Source,
    Sink,
    Grid { node: usize, step: usize },
    Battery { agent: usize, step: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EdgeKind {
    Grid {
        edge: usize,
        step: usize,
    },
    /// `(b_t, b_{t+1})`.
    Battery {
        agent: usize,
        step: usize,
    },
    /// `(v^b_t, b_t)`.
    Charge {
        agent: usize,
        step: usize,
    },
    /// `(b_t, v^b_t)`.
    Discharge {
        agent: usize,
        step: usize,
    },
    Source {
        node: usize,
        step: usize,
    },
    Sink {
        node: usize,
        step: usize,
    },
}

impl EdgeKind {
    pub fn is_transaction(&self) -> bool {
        matches!(self, EdgeKind::Charge { .. } | EdgeKind::Discharge { .. })
    }

    /// Owning agent of battery and transaction edges.
    pub fn agent(&self) -> Option<usize> {
        match *self {
            EdgeKind::Battery { agent, .. } | EdgeKind::Charge { agent, .. } | EdgeKind::Discharge { agent, .. } => {
                Some(agent)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub tail: usize,
    pub head: usize,
    pub kind: EdgeKind,
    pub capacity: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMode {
    /// Transaction edges at the total-supply bound.
    Relaxed,
    /// Transaction edges carry the capacities induced by a strategy profile.
    StrategyCapacitated,
}

/// The time-expanded network `G` (or `G_s`) with super source `x` and super
/// sink `y`.
///
/// Node ids: `0` is `x`, `1` is `y`; then for each step the grid copies of
/// the host nodes followed by the battery nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedGraph {
    horizon: usize,
    node_names: Vec<String>,
    agent_ids: Vec<String>,
    nodes: Vec<NodeKind>,
    edges: Vec<GraphEdge>,
    mode: GraphMode,
    charge: Vec<Vec<usize>>,
    discharge: Vec<Vec<usize>>,
    battery: Vec<Vec<usize>>,
}

pub const SOURCE: usize = 0;
pub const SINK: usize = 1;

impl ExpandedGraph {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &GraphEdge {
        &self.edges[id]
    }

    pub fn agent_count(&self) -> usize {
        self.agent_ids.len()
    }

    pub fn agent_ids(&self) -> &[String] {
        &self.agent_ids
    }

    pub fn charge_edge(&self, agent: usize, step: usize) -> usize {
        self.charge[agent][step]
    }

    pub fn discharge_edge(&self, agent: usize, step: usize) -> usize {
        self.discharge[agent][step]
    }

    /// Battery edge `(b_step, b_{step+1})`.
    pub fn battery_edge(&self, agent: usize, step: usize) -> usize {
        self.battery[agent][step]
    }

    pub fn battery_capacities(&self, agent: usize) -> Vec<Quantity> {
        self.battery[agent].iter().map(|&e| self.edges[e].capacity).collect()
    }

    /// Ids of all transaction edges, agent-major then step then charge/discharge.
    pub fn transaction_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.agent_count())
            .flat_map(move |b| (0..self.horizon).flat_map(move |t| [self.charge[b][t], self.discharge[b][t]]))
    }

    pub fn node_label(&self, node: usize) -> String {
        match self.nodes[node] {
            NodeKind::Source => "x".to_string(),
            NodeKind::Sink => "y".to_string(),
            NodeKind::Grid { node, step } => format!("{}@{}", self.node_names[node], step + 1),
            NodeKind::Battery { agent, step } => format!("bat:{}@{}", self.agent_ids[agent], step + 1),
        }
    }

    /// Same graph with every capacity multiplied by `factor`.
    pub fn scaled(&self, factor: Quantity) -> ExpandedGraph {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.capacity = e.capacity * factor;
        }
        out
    }

    /// Returns a copy with one edge capacity replaced.
    pub fn with_capacity(&self, edge: usize, capacity: Quantity) -> ExpandedGraph {
        let mut out = self.clone();
        out.edges[edge].capacity = capacity;
        out
    }

    /// Same edges in a different insertion order. `order[i]` is the old id of
    /// the edge placed at position `i`. Edge-id lookups are remapped.
    pub fn permuted(&self, order: &[usize]) -> ExpandedGraph {
        assert_eq!(order.len(), self.edges.len());
        let mut new_id = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let remap =
            |table: &Vec<Vec<usize>>| table.iter().map(|row| row.iter().map(|&e| new_id[e]).collect()).collect();
        ExpandedGraph {
            edges: order.iter().map(|&old| self.edges[old].clone()).collect(),
            charge: remap(&self.charge),
            discharge: remap(&self.discharge),
            battery: remap(&self.battery),
            ..self.clone()
        }
    }
}

/// Builds the relaxed time-expanded graph of a valid instance.
pub fn build_expanded_graph(instance: &Instance) -> Result<ExpandedGraph> {
    ensure_valid(instance)?;
    let horizon = instance.horizon;
    let node_count = instance.nodes.len();
    let agent_count = instance.agents.len();
    let layer = node_count + agent_count;
    let grid = |v: usize, t: usize| 2 + t * layer + v;
    let bat = |b: usize, t: usize| 2 + t * layer + node_count + b;

    let mut nodes = vec![NodeKind::Source, NodeKind::Sink];
    for t in 0..horizon {
        nodes.extend((0..node_count).map(|node| NodeKind::Grid { node, step: t }));
        nodes.extend((0..agent_count).map(|agent| NodeKind::Battery { agent, step: t }));
    }

    let index: HashMap<&str, usize> = instance.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let relaxed = instance.total_supply();
    let mut edges = Vec::new();
    let mut charge = vec![vec![0; horizon]; agent_count];
    let mut discharge = vec![vec![0; horizon]; agent_count];
    let mut battery = vec![Vec::with_capacity(horizon.saturating_sub(1)); agent_count];
    let push = |edges: &mut Vec<GraphEdge>, tail, head, kind, capacity| {
        edges.push(GraphEdge { tail, head, kind, capacity });
        edges.len() - 1
    };

    for t in 0..horizon {
        for (e, host) in instance.edges.iter().enumerate() {
            let (u, v) = (index[host.from.as_str()], index[host.to.as_str()]);
            push(&mut edges, grid(u, t), grid(v, t), EdgeKind::Grid { edge: e, step: t }, host.capacity[t]);
        }
        for (v, name) in instance.nodes.iter().enumerate() {
            let d = instance.demand(name, t);
            if d.is_positive() {
                push(&mut edges, SOURCE, grid(v, t), EdgeKind::Source { node: v, step: t }, d);
            } else if d.is_negative() {
                push(&mut edges, grid(v, t), SINK, EdgeKind::Sink { node: v, step: t }, -d);
            }
        }
        for (b, agent) in instance.agents.iter().enumerate() {
            let v = index[agent.location.as_str()];
            charge[b][t] = push(&mut edges, grid(v, t), bat(b, t), EdgeKind::Charge { agent: b, step: t }, relaxed);
            discharge[b][t] =
                push(&mut edges, bat(b, t), grid(v, t), EdgeKind::Discharge { agent: b, step: t }, relaxed);
        }
        if t + 1 < horizon {
            for (b, agent) in instance.agents.iter().enumerate() {
                battery[b].push(push(
                    &mut edges,
                    bat(b, t),
                    bat(b, t + 1),
                    EdgeKind::Battery { agent: b, step: t },
                    agent.battery_capacity[t],
                ));
            }
        }
    }

    Ok(ExpandedGraph {
        horizon,
        node_names: instance.nodes.clone(),
        agent_ids: instance.agents.iter().map(|a| a.id.clone()).collect(),
        nodes,
        edges,
        mode: GraphMode::Relaxed,
        charge,
        discharge,
        battery,
    })
}

/// Per-agent, per-step charge (positive) or discharge (negative) amounts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile(Vec<Vec<Quantity>>);

impl StrategyProfile {
    pub fn new(values: Vec<Vec<Quantity>>) -> Self {
        StrategyProfile(values)
    }

    pub fn zero(agents: usize, horizon: usize) -> Self {
        StrategyProfile(vec![vec![Quantity::ZERO; horizon]; agents])
    }

    /// Convenience for integer-valued profiles.
    pub fn from_integers(values: &[&[i64]]) -> Self {
        StrategyProfile(values.iter().map(|row| row.iter().map(|&v| Quantity::from_integer(v)).collect()).collect())
    }

    pub fn agents(&self) -> usize {
        self.0.len()
    }

    pub fn strategy(&self, agent: usize) -> &[Quantity] {
        &self.0[agent]
    }

    pub fn rows(&self) -> &[Vec<Quantity>] {
        &self.0
    }

    pub fn with_strategy(&self, agent: usize, strategy: Vec<Quantity>) -> Self {
        let mut out = self.clone();
        out.0[agent] = strategy;
        out
    }

    pub fn scaled(&self, factor: Quantity) -> Self {
        StrategyProfile(self.0.iter().map(|row| row.iter().map(|v| *v * factor).collect()).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(Quantity::is_zero)
    }
}

/// Battery feasibility of a single strategy: every prefix sum before the last
/// step lies in `[0, κ((b_t, b_{t+1}))]`, and the full sum is non-negative.
pub fn check_strategy(agent: &str, strategy: &[Quantity], battery: &[Quantity]) -> Result<()> {
    let horizon = battery.len() + 1;
    if strategy.len() != horizon {
        return Err(Error::Shape(format!("strategy of `{agent}` has {} entries, expected {horizon}", strategy.len())));
    }
    let mut prefix = Quantity::ZERO;
    for (t, s) in strategy.iter().enumerate() {
        prefix += *s;
        let cap = battery.get(t).copied();
        let above = cap.is_some_and(|c| prefix > c);
        if prefix.is_negative() || above {
            return Err(Error::InfeasibleStrategy { agent: agent.to_string(), step: t + 1, prefix, capacity: cap });
        }
    }
    Ok(())
}

pub fn check_profile(graph: &ExpandedGraph, profile: &StrategyProfile) -> Result<()> {
    if profile.agents() != graph.agent_count() {
        return Err(Error::Shape(format!(
            "profile has {} strategies for {} agents",
            profile.agents(),
            graph.agent_count()
        )));
    }
    for b in 0..graph.agent_count() {
        check_strategy(&graph.agent_ids[b], profile.strategy(b), &graph.battery_capacities(b))?;
    }
    Ok(())
}

/// Imposes the capacity profile `κ_s`: charging `s > 0` opens `(v^b_t, b_t)`
/// with capacity `s`, discharging opens `(b_t, v^b_t)` with `|s|`, the
/// opposite edge gets 0.
pub fn apply_strategy(graph: &ExpandedGraph, profile: &StrategyProfile) -> Result<ExpandedGraph> {
    check_profile(graph, profile)?;
    let mut out = graph.clone();
    out.mode = GraphMode::StrategyCapacitated;
    for b in 0..graph.agent_count() {
        for (t, s) in profile.strategy(b).iter().enumerate() {
            let (c, d) = (out.charge[b][t], out.discharge[b][t]);
            out.edges[c].capacity = (*s).max(Quantity::ZERO);
            out.edges[d].capacity = (-*s).max(Quantity::ZERO);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{paper_instance, PaperInstanceId};

    fn fig1() -> Instance {
        paper_instance(PaperInstanceId::Fig1Structure).unwrap().0
    }

    #[test]
    fn fig1_is_valid() {
        assert!(validate_instance(&fig1()).is_empty());
    }

    #[test]
    fn negative_battery_capacity_is_reported() {
        let mut inst = fig1();
        inst.agents[0].battery_capacity[0] = Quantity::from_integer(-1);
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::NegativeCapacity { .. }));
        assert!(v[0].to_string().contains("capacity < 0"));
    }

    #[test]
    fn unknown_location_is_reported() {
        let mut inst = fig1();
        inst.agents[1].location = "nowhere".into();
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("unknown location"));
    }

    #[test]
    fn shape_violations() {
        let mut inst = fig1();
        inst.horizon = 0;
        inst.agents.push(Agent { id: "a".into(), location: inst.nodes[1].clone(), battery_capacity: vec![] });
        let v = validate_instance(&inst);
        assert!(v.contains(&Violation::ZeroHorizon));
        assert!(v.iter().any(|x| matches!(x, Violation::DuplicateAgent { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::SharedLocation { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::WrongLength { .. })));
        assert!(build_expanded_graph(&inst).is_err());
    }

    #[test]
    fn fig1_graph_shape() {
        let g = build_expanded_graph(&fig1()).unwrap();
        // |V|·T + |B|·T + 2
        assert_eq!(g.nodes().len(), 2 * 2 + 2 * 2 + 2);
        let count = |f: fn(&EdgeKind) -> bool| g.edges().iter().filter(|e| f(&e.kind)).count();
        assert_eq!(count(|k| matches!(k, EdgeKind::Battery { .. })), 2);
        assert_eq!(count(EdgeKind::is_transaction), 8);
        assert_eq!(count(|k| matches!(k, EdgeKind::Grid { .. })), 4);
        // relaxed transaction capacity is the total supply
        for e in g.transaction_edges() {
            assert_eq!(g.edge(e).capacity, Quantity::ONE);
        }
        assert_eq!(g.mode(), GraphMode::Relaxed);
    }

    #[test]
    fn zero_agents_no_battery_structure() {
        let mut inst = fig1();
        inst.agents.clear();
        let g = build_expanded_graph(&inst).unwrap();
        assert_eq!(g.nodes().len(), 2 * 2 + 2);
        assert!(g.edges().iter().all(|e| e.kind.agent().is_none()));
    }

    #[test]
    fn source_and_sink_capacities() {
        let g = build_expanded_graph(&fig1()).unwrap();
        for e in g.edges() {
            match e.kind {
                EdgeKind::Source { .. } => assert_eq!(e.tail, SOURCE),
                EdgeKind::Sink { .. } => assert_eq!(e.head, SINK),
                _ => {
                    assert_ne!(e.tail, SOURCE);
                    assert_ne!(e.head, SINK);
                }
            }
            assert!(!e.capacity.is_negative());
        }
        let supply: Quantity = g.edges().iter().filter(|e| e.tail == SOURCE).map(|e| e.capacity).sum();
        assert_eq!(supply, Quantity::ONE);
    }

    #[test]
    fn battery_nodes_have_no_terminal_edges() {
        let g = build_expanded_graph(&fig1()).unwrap();
        for e in g.edges() {
            if e.tail == SOURCE {
                assert!(matches!(g.nodes()[e.head], NodeKind::Grid { .. }));
            }
            if e.head == SINK {
                assert!(matches!(g.nodes()[e.tail], NodeKind::Grid { .. }));
            }
        }
    }

    #[test]
    fn apply_strategy_sets_transaction_capacities() {
        let g = build_expanded_graph(&fig1()).unwrap();
        let p = StrategyProfile::from_integers(&[&[2, -2], &[0, 0]]);
        let gs = apply_strategy(&g, &p).unwrap();
        assert_eq!(gs.mode(), GraphMode::StrategyCapacitated);
        assert_eq!(gs.edge(gs.charge_edge(0, 0)).capacity, Quantity::from_integer(2));
        assert_eq!(gs.edge(gs.discharge_edge(0, 0)).capacity, Quantity::ZERO);
        assert_eq!(gs.edge(gs.charge_edge(0, 1)).capacity, Quantity::ZERO);
        assert_eq!(gs.edge(gs.discharge_edge(0, 1)).capacity, Quantity::from_integer(2));
        for t in 0..2 {
            assert!(gs.edge(gs.charge_edge(1, t)).capacity.is_zero());
            assert!(gs.edge(gs.discharge_edge(1, t)).capacity.is_zero());
        }
    }

    #[test]
    fn infeasible_profiles_are_rejected() {
        let g = build_expanded_graph(&fig1()).unwrap();
        // b's battery holds 1
        let over = StrategyProfile::from_integers(&[&[0, 0], &[2, -2]]);
        match apply_strategy(&g, &over) {
            Err(Error::InfeasibleStrategy { agent, step, .. }) => {
                assert_eq!(agent, "b");
                assert_eq!(step, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let under = StrategyProfile::from_integers(&[&[-1, 1], &[0, 0]]);
        assert!(apply_strategy(&g, &under).is_err());
        // horizon closure
        let closure = StrategyProfile::from_integers(&[&[1, -2], &[0, 0]]);
        assert!(matches!(apply_strategy(&g, &closure), Err(Error::InfeasibleStrategy { step: 2, capacity: None, .. })));
        let short = StrategyProfile::from_integers(&[&[0, 0]]);
        assert!(matches!(apply_strategy(&g, &short), Err(Error::Shape(_))));
    }

    #[test]
    fn permuted_graph_remaps_lookups() {
        let g = build_expanded_graph(&fig1()).unwrap();
        let order: Vec<usize> = (0..g.edges().len()).rev().collect();
        let p = g.permuted(&order);
        for b in 0..2 {
            for t in 0..2 {
                assert_eq!(p.edge(p.charge_edge(b, t)), g.edge(g.charge_edge(b, t)));
            }
            assert_eq!(p.battery_capacities(b), g.battery_capacities(b));
        }
    }
}
