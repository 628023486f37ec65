//! Admissibility, utilities and welfare of strategy profiles.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::flow::{capacity_scale, certify_max_flow, max_flow, Flow, Residual};
use crate::model::{apply_strategy, build_expanded_graph, check_profile, ExpandedGraph, Instance, StrategyProfile};
use crate::pricing::PriceProfile;
use crate::quantity::{common_denominator, Quantity};

/// An agent's payoff. `NegativeInfinity` marks an inadmissible strategy and
/// sorts below every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Utility {
    NegativeInfinity,
    Finite(Quantity),
}

impl Utility {
    pub fn finite(&self) -> Option<Quantity> {
        match self {
            Utility::Finite(q) => Some(*q),
            Utility::NegativeInfinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Utility::Finite(_))
    }
}

impl PartialOrd for Utility {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Utility {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Utility::NegativeInfinity, Utility::NegativeInfinity) => Ordering::Equal,
            (Utility::NegativeInfinity, _) => Ordering::Less,
            (_, Utility::NegativeInfinity) => Ordering::Greater,
            (Utility::Finite(a), Utility::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utility::NegativeInfinity => f.write_str("-inf"),
            Utility::Finite(q) => write!(f, "{q}"),
        }
    }
}

impl Serialize for Utility {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Charge,
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeVerdict {
    pub edge: usize,
    pub agent: usize,
    /// 0-based.
    pub step: usize,
    pub direction: Direction,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissibilityVerdict {
    pub edges: Vec<EdgeVerdict>,
    pub agents: Vec<bool>,
    pub profile: bool,
}

impl AdmissibilityVerdict {
    fn from_edges(edges: Vec<EdgeVerdict>, agents: usize) -> Self {
        let mut flags = vec![true; agents];
        for e in &edges {
            flags[e.agent] &= e.admissible;
        }
        let profile = flags.iter().all(|&a| a);
        AdmissibilityVerdict { edges, agents: flags, profile }
    }
}

fn verdict_from_residual(graph: &ExpandedGraph, net: &Residual) -> AdmissibilityVerdict {
    let mut edges = Vec::new();
    for b in 0..graph.agent_count() {
        for t in 0..graph.horizon() {
            for (edge, direction) in
                [(graph.charge_edge(b, t), Direction::Charge), (graph.discharge_edge(b, t), Direction::Discharge)]
            {
                let admissible = net.saturated_in_every_max_flow(edge);
                edges.push(EdgeVerdict { edge, agent: b, step: t, direction, admissible });
            }
        }
    }
    AdmissibilityVerdict::from_edges(edges, graph.agent_count())
}

/// Which transaction edges, strategies and the profile are admissible: one
/// maximum flow on `G_s`, then one residual query per transaction edge.
pub fn admissibility(instance: &Instance, profile: &StrategyProfile) -> Result<AdmissibilityVerdict> {
    let graph = apply_strategy(&build_expanded_graph(instance)?, profile)?;
    let scale = capacity_scale(&graph);
    let mut net = Residual::from_graph(&graph, scale);
    net.run();
    Ok(verdict_from_residual(&graph, &net))
}

/// Utilities from an admissibility verdict: `-∞` for agents with an
/// inadmissible strategy of their own, `-Σ s_t p_t` otherwise.
pub fn utilities_from_verdict(agents: &[bool], profile: &StrategyProfile, prices: &PriceProfile) -> Vec<Utility> {
    agents
        .iter()
        .enumerate()
        .map(
            |(b, &ok)| if ok { Utility::Finite(prices.payoff(profile.strategy(b))) } else { Utility::NegativeInfinity },
        )
        .collect()
}

pub fn utilities(instance: &Instance, profile: &StrategyProfile, prices: &PriceProfile) -> Result<Vec<Utility>> {
    prices.check_horizon(instance.horizon)?;
    let verdict = admissibility(instance, profile)?;
    Ok(utilities_from_verdict(&verdict.agents, profile, prices))
}

/// `W(s)`: the maximum-flow value of `G_s`, admissible or not.
pub fn welfare(instance: &Instance, profile: &StrategyProfile) -> Result<Quantity> {
    let graph = apply_strategy(&build_expanded_graph(instance)?, profile)?;
    Ok(max_flow(&graph).value())
}

/// Highest welfare over all feasible profiles, read off the relaxed graph.
pub fn optimal_welfare(instance: &Instance) -> Result<Quantity> {
    Ok(max_flow(&build_expanded_graph(instance)?).value())
}

/// Turns a maximum flow of the relaxed graph into a profile: each agent
/// charges and discharges what the flow moves through its battery.
///
/// A profile read off an arbitrary maximum flow can be inadmissible when
/// another maximum flow serves the same demand with less battery traffic.
/// Such traffic is shifted off along residual cycles until every
/// transaction edge is needed; each shift strictly lowers the total
/// transaction capacity, so this terminates. The result is battery-feasible,
/// admissible and has welfare `|flow|`.
pub fn profile_from_flow(instance: &Instance, flow: &Flow) -> Result<StrategyProfile> {
    let graph = build_expanded_graph(instance)?;
    certify_max_flow(&graph, flow)?;
    let read = |value: &dyn Fn(usize) -> Quantity| {
        StrategyProfile::new(
            (0..graph.agent_count())
                .map(|b| {
                    (0..graph.horizon())
                        .map(|t| value(graph.charge_edge(b, t)) - value(graph.discharge_edge(b, t)))
                        .collect()
                })
                .collect(),
        )
    };
    let mut profile = read(&|e| flow.on(e));
    loop {
        let capacitated = apply_strategy(&graph, &profile)?;
        let scale = capacity_scale(&capacitated);
        let mut net = Residual::from_graph(&capacitated, scale);
        net.run();
        let loose = capacitated.transaction_edges().find(|&e| !net.saturated_in_every_max_flow(e));
        let Some(edge) = loose else {
            return Ok(profile);
        };
        if net.flow(edge) == net.capacity(edge) {
            let shifted = net.shift_off(edge);
            debug_assert!(shifted > 0);
        }
        profile = read(&|e| Quantity::new(net.flow(e), scale));
    }
}

/// Repeated profile evaluation on one instance. Capacities are kept as
/// integers on a common scale that covers the instance and any strategy
/// granularity registered up front.
#[derive(Debug, Clone)]
pub struct Game {
    instance: Instance,
    graph: ExpandedGraph,
    scale: i64,
    capacities: Vec<i64>,
    template: Residual,
}

/// Welfare and per-agent admissibility of one profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub welfare: Quantity,
    pub admissible: Vec<bool>,
}

impl Evaluation {
    pub fn profile_admissible(&self) -> bool {
        self.admissible.iter().all(|&a| a)
    }
}

impl Game {
    pub fn new(instance: &Instance) -> Result<Game> {
        Game::with_granularity(instance, Quantity::ONE)
    }

    pub fn with_granularity(instance: &Instance, granularity: Quantity) -> Result<Game> {
        Game::covering(instance, &[granularity])
    }

    /// A game whose integer scale also resolves every value in `extra`.
    pub fn covering(instance: &Instance, extra: &[Quantity]) -> Result<Game> {
        let graph = build_expanded_graph(instance)?;
        let scale = common_denominator(graph.edges().iter().map(|e| &e.capacity).chain(extra));
        let template = Residual::from_graph(&graph, scale);
        let capacities = graph.edges().iter().map(|e| e.capacity.scaled_integer(scale)).collect();
        Ok(Game { instance: instance.clone(), graph, scale, capacities, template })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn graph(&self) -> &ExpandedGraph {
        &self.graph
    }

    pub fn agents(&self) -> usize {
        self.graph.agent_count()
    }

    pub fn optimal_welfare(&self) -> Quantity {
        let mut net = self.template.clone();
        Quantity::new(net.run(), self.scale)
    }

    /// Evaluates a battery-feasible profile.
    pub fn evaluate(&self, profile: &StrategyProfile) -> Result<Evaluation> {
        check_profile(&self.graph, profile)?;
        let scale = common_denominator(profile.rows().iter().flatten());
        if self.scale % scale != 0 {
            // off the registered scale: take the slow path
            let graph = apply_strategy(&self.graph, profile)?;
            let s = capacity_scale(&graph);
            let mut net = Residual::from_graph(&graph, s);
            let value = net.run();
            let verdict = verdict_from_residual(&graph, &net);
            return Ok(Evaluation { welfare: Quantity::new(value, s), admissible: verdict.agents });
        }
        let rows: Vec<Vec<i64>> =
            profile.rows().iter().map(|r| r.iter().map(|v| v.scaled_integer(self.scale)).collect()).collect();
        let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
        Ok(self.evaluate_scaled(&refs))
    }

    fn solve(&self, strategies: &[&[i64]]) -> Residual {
        let mut net = self.template.clone();
        let mut caps = self.capacities.clone();
        for (b, strategy) in strategies.iter().enumerate() {
            for (t, &s) in strategy.iter().enumerate() {
                caps[self.graph.charge_edge(b, t)] = s.max(0);
                caps[self.graph.discharge_edge(b, t)] = (-s).max(0);
            }
        }
        net.reset(&caps);
        net.run();
        net
    }

    /// Hot path for profiles already expressed on the integer scale. The
    /// caller guarantees battery feasibility.
    pub(crate) fn evaluate_scaled(&self, strategies: &[&[i64]]) -> Evaluation {
        let net = self.solve(strategies);
        let value = net.value();
        let admissible = (0..strategies.len())
            .map(|b| {
                (0..self.graph.horizon()).all(|t| {
                    net.saturated_in_every_max_flow(self.graph.charge_edge(b, t))
                        && net.saturated_in_every_max_flow(self.graph.discharge_edge(b, t))
                })
            })
            .collect();
        Evaluation { welfare: Quantity::new(value, self.scale), admissible }
    }

    /// Like [`Game::evaluate_scaled`] but only decides whether `agent`'s own
    /// strategy is admissible.
    pub(crate) fn agent_admissible_scaled(&self, strategies: &[&[i64]], agent: usize) -> bool {
        let net = self.solve(strategies);
        (0..self.graph.horizon()).all(|t| {
            net.saturated_in_every_max_flow(self.graph.charge_edge(agent, t))
                && net.saturated_in_every_max_flow(self.graph.discharge_edge(agent, t))
        })
    }

    pub(crate) fn scale_strategy(&self, strategy: &[Quantity]) -> Vec<i64> {
        strategy.iter().map(|v| v.scaled_integer(self.scale)).collect()
    }

    pub fn utilities(&self, profile: &StrategyProfile, prices: &PriceProfile) -> Result<Vec<Utility>> {
        prices.check_horizon(self.graph.horizon())?;
        let eval = self.evaluate(profile)?;
        Ok(utilities_from_verdict(&eval.admissible, profile, prices))
    }
}

impl From<Game> for Instance {
    fn from(game: Game) -> Instance {
        game.instance
    }
}
