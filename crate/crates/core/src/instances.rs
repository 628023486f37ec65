//! Built-in named instances, a seeded random generator and the JSON
//! instance file format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibria::strategy_grid;
use crate::error::{Error, Result};
use crate::model::{ensure_valid, Agent, HostEdge, Instance, StrategyProfile};
use crate::pricing::PriceProfile;
use crate::quantity::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PaperInstanceId {
    /// Two nodes, two agents, two steps.
    Fig1Structure,
    /// Two agents on two nodes plus an isolated third prosumer.
    Fig2FlowExample,
    /// Five-node path with agents at both ends and the middle.
    Fig3T2Poa,
    /// Four-step gadget without pure equilibria.
    Fig4NoNe,
    /// Single self-supplying agent with alternating supply and demand.
    Fig5AscPos { horizon: usize },
    /// Supply-sign pricing gadget with a dummy node.
    Fig6SupplySign { q: Quantity, r: Quantity },
    /// Agent path that needs `T - 1` cooperating agents.
    Fig7StrongPoa { horizon: usize },
}

impl PaperInstanceId {
    /// One representative of every named instance.
    pub fn suite() -> Vec<PaperInstanceId> {
        vec![
            PaperInstanceId::Fig1Structure,
            PaperInstanceId::Fig2FlowExample,
            PaperInstanceId::Fig3T2Poa,
            PaperInstanceId::Fig4NoNe,
            PaperInstanceId::Fig5AscPos { horizon: 4 },
            PaperInstanceId::Fig6SupplySign { q: Quantity::ONE, r: Quantity::ONE },
            PaperInstanceId::Fig7StrongPoa { horizon: 4 },
        ]
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            PaperInstanceId::Fig5AscPos { horizon } if horizon < 2 => {
                Err(Error::Parameter(format!("fig5_asc_pos needs T >= 2, got {horizon}")))
            }
            PaperInstanceId::Fig7StrongPoa { horizon } if horizon < 3 => {
                Err(Error::Parameter(format!("fig7_strong_poa needs T >= 3, got {horizon}")))
            }
            PaperInstanceId::Fig6SupplySign { q, r } if !q.is_positive() || !r.is_positive() => {
                Err(Error::Parameter(format!("fig6_supply_sign needs q, r > 0, got {q}, {r}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PaperInstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PaperInstanceId::Fig1Structure => write!(f, "fig1_structure"),
            PaperInstanceId::Fig2FlowExample => write!(f, "fig2_flow_example"),
            PaperInstanceId::Fig3T2Poa => write!(f, "fig3_t2poa"),
            PaperInstanceId::Fig4NoNe => write!(f, "fig4_no_ne"),
            PaperInstanceId::Fig5AscPos { horizon } => write!(f, "fig5_asc_pos:{horizon}"),
            PaperInstanceId::Fig6SupplySign { q, r } => write!(f, "fig6_supply_sign:{q},{r}"),
            PaperInstanceId::Fig7StrongPoa { horizon } => write!(f, "fig7_strong_poa:{horizon}"),
        }
    }
}

/// Parses `name[:params]`, e.g. `fig5_asc_pos:6` or `fig6_supply_sign:1,1/2`.
/// Parameters default to `T = 4` and `q = r = 1`.
impl FromStr for PaperInstanceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let horizon = |default: usize| -> Result<usize> {
            params.map_or(Ok(default), |p| {
                p.trim().parse().map_err(|_| Error::Parameter(format!("`{p}` is not a horizon")))
            })
        };
        let no_params = |id: PaperInstanceId| match params {
            Some(p) => Err(Error::Parameter(format!("{name} takes no parameters, got `{p}`"))),
            None => Ok(id),
        };
        let id = match name {
            "fig1_structure" | "fig1" => no_params(PaperInstanceId::Fig1Structure)?,
            "fig2_flow_example" | "fig2" => no_params(PaperInstanceId::Fig2FlowExample)?,
            "fig3_t2poa" | "fig3" => no_params(PaperInstanceId::Fig3T2Poa)?,
            "fig4_no_ne" | "fig4" => no_params(PaperInstanceId::Fig4NoNe)?,
            "fig5_asc_pos" | "fig5" => PaperInstanceId::Fig5AscPos { horizon: horizon(4)? },
            "fig7_strong_poa" | "fig7" => PaperInstanceId::Fig7StrongPoa { horizon: horizon(4)? },
            "fig6_supply_sign" | "fig6" => {
                let (q, r) = match params {
                    None => (Quantity::ONE, Quantity::ONE),
                    Some(p) => {
                        let (q, r) =
                            p.split_once(',').ok_or_else(|| Error::Parameter(format!("expected `q,r`, got `{p}`")))?;
                        let parse = |v: &str| v.parse::<Quantity>().map_err(|e| Error::Parameter(e.to_string()));
                        (parse(q)?, parse(r)?)
                    }
                };
                PaperInstanceId::Fig6SupplySign { q, r }
            }
            other => return Err(Error::Parameter(format!("unknown paper instance `{other}`"))),
        };
        id.check()?;
        Ok(id)
    }
}

fn ints(values: &[i64]) -> Vec<Quantity> {
    values.iter().map(|&v| Quantity::from_integer(v)).collect()
}

fn edge(id: &str, from: &str, to: &str, capacity: Vec<Quantity>) -> HostEdge {
    HostEdge { id: id.into(), from: from.into(), to: to.into(), capacity }
}

fn agent(id: &str, location: &str, battery_capacity: Vec<Quantity>) -> Agent {
    Agent { id: id.into(), location: location.into(), battery_capacity }
}

fn agent_name(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("b{i}")
    }
}

fn fig1(battery: [i64; 2]) -> Instance {
    Instance {
        horizon: 2,
        nodes: vec!["u".into(), "w".into()],
        edges: vec![edge("uw", "u", "w", ints(&[1, 1])), edge("wu", "w", "u", ints(&[1, 1]))],
        demands: BTreeMap::from([("u".into(), ints(&[1, 0])), ("w".into(), ints(&[0, -1]))]),
        agents: vec![agent("a", "u", ints(&[battery[0]])), agent("b", "w", ints(&[battery[1]]))],
    }
}

/// Exact reconstruction of a named instance together with the price profile
/// it is analysed under.
pub fn paper_instance(id: PaperInstanceId) -> Result<(Instance, PriceProfile)> {
    id.check()?;
    let out = match id {
        PaperInstanceId::Fig1Structure => (fig1([2, 1]), PriceProfile::from_integers(&[1, 2])),
        PaperInstanceId::Fig2FlowExample => {
            let mut inst = fig1([1, 1]);
            inst.nodes.push("z".into());
            inst.demands.insert("z".into(), ints(&[1, -1]));
            inst.agents.push(agent("c", "z", ints(&[1])));
            (inst, PriceProfile::from_integers(&[1, 2]))
        }
        PaperInstanceId::Fig3T2Poa => {
            let nodes: Vec<String> = (1..=5).map(|i| format!("v{i}")).collect();
            let mut edges = Vec::new();
            for i in 1..5 {
                let (u, v) = (format!("v{i}"), format!("v{}", i + 1));
                edges.push(edge(&format!("{u}{v}"), &u, &v, ints(&[1, 1])));
                edges.push(edge(&format!("{v}{u}"), &v, &u, ints(&[1, 1])));
            }
            let demands = BTreeMap::from([
                ("v1".into(), ints(&[1, 0])),
                ("v2".into(), ints(&[1, 0])),
                ("v4".into(), ints(&[0, -1])),
                ("v5".into(), ints(&[0, -1])),
            ]);
            let agents = vec![agent("a", "v1", ints(&[1])), agent("c", "v3", ints(&[1])), agent("e", "v5", ints(&[1]))];
            (Instance { horizon: 2, nodes, edges, demands, agents }, PriceProfile::from_integers(&[1, 2]))
        }
        PaperInstanceId::Fig4NoNe => {
            let two = ints(&[2, 2, 2, 2]);
            let inst = Instance {
                horizon: 4,
                nodes: vec!["top".into(), "a".into(), "c".into(), "bottom".into()],
                edges: vec![
                    edge("top-a", "top", "a", two.clone()),
                    edge("top-c", "top", "c", two.clone()),
                    edge("a-bottom", "a", "bottom", two.clone()),
                    edge("c-bottom", "c", "bottom", two),
                ],
                demands: BTreeMap::from([
                    ("top".into(), ints(&[1, 0, 0, 0])),
                    ("a".into(), ints(&[0, -1, 1, 0])),
                    ("c".into(), ints(&[0, -1, 1, 0])),
                    ("bottom".into(), vec![Quantity::ZERO, Quantity::ZERO, Quantity::ZERO, Quantity::new(-3, 2)]),
                ]),
                agents: vec![agent("a", "a", ints(&[2, 2, 2])), agent("c", "c", ints(&[2, 2, 2]))],
            };
            (inst, PriceProfile::from_integers(&[1, 11, 12, 13]))
        }
        PaperInstanceId::Fig5AscPos { horizon } => {
            let demand: Vec<i64> = (0..horizon).map(|t| if t % 2 == 0 { 1 } else { -1 }).collect();
            let inst = Instance {
                horizon,
                nodes: vec!["a".into()],
                edges: vec![],
                demands: BTreeMap::from([("a".into(), ints(&demand))]),
                agents: vec![agent("a", "a", vec![Quantity::ONE; horizon - 1])],
            };
            (inst, ascending(horizon))
        }
        PaperInstanceId::Fig6SupplySign { q, r } => {
            let inst = Instance {
                horizon: 3,
                nodes: vec!["a".into(), "b".into(), "c".into()],
                edges: vec![edge("ab", "a", "b", ints(&[0, 1, 0]))],
                demands: BTreeMap::from([
                    ("a".into(), ints(&[1, 0, 0])),
                    ("b".into(), ints(&[0, 0, -1])),
                    ("c".into(), ints(&[-1, 1, 0])),
                ]),
                agents: vec![agent("a", "a", ints(&[1, 1])), agent("b", "b", ints(&[1, 1]))],
            };
            (inst, PriceProfile::new(vec![Quantity::ZERO, -q, r]))
        }
        PaperInstanceId::Fig7StrongPoa { horizon } => {
            let len = horizon - 1;
            let nodes: Vec<String> = (1..=len).map(|i| format!("v{i}")).collect();
            let edges = (1..len)
                .map(|i| {
                    // open only at step i + 1 (1-based)
                    let caps = (1..=horizon).map(|t| if t == i + 1 { 1 } else { 0 }).collect::<Vec<_>>();
                    edge(&format!("v{i}v{}", i + 1), &nodes[i - 1], &nodes[i], ints(&caps))
                })
                .collect();
            let mut first = vec![0; horizon];
            first[0] = 1;
            let mut last = vec![0; horizon];
            last[horizon - 1] = -1;
            let agents = (0..len).map(|i| agent(&agent_name(i), &nodes[i], vec![Quantity::ONE; horizon - 1])).collect();
            let inst = Instance {
                horizon,
                demands: BTreeMap::from([(nodes[0].clone(), ints(&first)), (nodes[len - 1].clone(), ints(&last))]),
                nodes,
                edges,
                agents,
            };
            (inst, ascending(horizon))
        }
    };
    Ok(out)
}

fn ascending(horizon: usize) -> PriceProfile {
    PriceProfile::new((1..=horizon as i64).map(Quantity::from_integer).collect())
}

/// Knobs of [`random_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomParams {
    pub nodes: usize,
    pub horizon: usize,
    pub agents: usize,
    pub max_capacity: i64,
    /// Probability in `[0, 1]` that a `(node, step)` pair has nonzero demand.
    pub demand_density: Quantity,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { nodes: 3, horizon: 3, agents: 2, max_capacity: 2, demand_density: Quantity::new(1, 2) }
    }
}

/// A valid random instance, a deterministic function of `seed` and `params`.
/// At most one agent per node, so `agents` is capped at `nodes`.
pub fn random_instance(seed: u64, params: &RandomParams) -> Result<Instance> {
    if params.nodes == 0 || params.horizon == 0 || params.max_capacity < 1 {
        return Err(Error::Parameter("nodes, horizon and max_capacity must be positive".into()));
    }
    let density = params.demand_density;
    if density.is_negative() || density > Quantity::ONE {
        return Err(Error::Parameter(format!("demand density {density} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<String> = (0..params.nodes).map(|i| format!("n{i}")).collect();
    let horizon = params.horizon;
    let cap = |rng: &mut ChaCha8Rng| Quantity::from_integer(rng.gen_range(0..=params.max_capacity));

    let mut edges = Vec::new();
    for u in 0..nodes.len() {
        for v in 0..nodes.len() {
            if u != v && rng.gen_bool(0.5) {
                let capacity = (0..horizon).map(|_| cap(&mut rng)).collect();
                edges.push(edge(&format!("{}-{}", nodes[u], nodes[v]), &nodes[u], &nodes[v], capacity));
            }
        }
    }

    let (num, den) = (density.numer() as u32, density.denom() as u32);
    let mut demands = BTreeMap::new();
    for node in &nodes {
        let values: Vec<Quantity> = (0..horizon)
            .map(|_| {
                if num > 0 && rng.gen_ratio(num, den) {
                    let magnitude = rng.gen_range(1..=params.max_capacity);
                    Quantity::from_integer(if rng.gen_bool(0.5) { magnitude } else { -magnitude })
                } else {
                    Quantity::ZERO
                }
            })
            .collect();
        if values.iter().any(|d| !d.is_zero()) {
            demands.insert(node.clone(), values);
        }
    }

    let mut hosts: Vec<usize> = (0..nodes.len()).collect();
    hosts.shuffle(&mut rng);
    let agents = hosts
        .into_iter()
        .take(params.agents)
        .enumerate()
        .map(|(i, v)| agent(&agent_name(i), &nodes[v], (1..horizon).map(|_| cap(&mut rng)).collect()))
        .collect();

    let instance = Instance { horizon, nodes, edges, demands, agents };
    ensure_valid(&instance)?;
    Ok(instance)
}

/// A profile drawn uniformly from each agent's strategy grid.
pub fn random_profile<R: Rng>(instance: &Instance, granularity: Quantity, rng: &mut R) -> Result<StrategyProfile> {
    let rows = (0..instance.agents.len())
        .map(|b| {
            let grid = strategy_grid(instance, b, granularity)?;
            Ok(grid.choose(rng).expect("grid contains the zero strategy").clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StrategyProfile::new(rows))
}

/// Integers are written as JSON numbers, everything else as `"num/den"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FileQuantity(Quantity);

impl Serialize for FileQuantity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            serializer.serialize_i64(self.0.numer())
        } else {
            self.0.serialize(serializer)
        }
    }
}

impl<'de> Deserialize<'de> for FileQuantity {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Quantity::deserialize(deserializer).map(FileQuantity)
    }
}

fn wrap(values: &[Quantity]) -> Vec<FileQuantity> {
    values.iter().copied().map(FileQuantity).collect()
}

fn unwrap(values: Vec<FileQuantity>) -> Vec<Quantity> {
    values.into_iter().map(|q| q.0).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    from: String,
    to: String,
    capacity: Vec<FileQuantity>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: String,
    location: String,
    battery_capacity: Vec<FileQuantity>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(rename = "T")]
    horizon: usize,
    nodes: Vec<String>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    demands: BTreeMap<String, Vec<FileQuantity>>,
    #[serde(default)]
    agents: Vec<AgentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prices: Option<Vec<FileQuantity>>,
}

/// Parses an instance document together with its optional price profile.
pub fn load_document(text: &str) -> Result<(Instance, Option<PriceProfile>)> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let instance = Instance {
        horizon: doc.horizon,
        nodes: doc.nodes,
        edges: doc
            .edges
            .into_iter()
            .map(|e| HostEdge { id: e.id, from: e.from, to: e.to, capacity: unwrap(e.capacity) })
            .collect(),
        demands: doc.demands.into_iter().map(|(k, v)| (k, unwrap(v))).collect(),
        agents: doc
            .agents
            .into_iter()
            .map(|a| Agent { id: a.id, location: a.location, battery_capacity: unwrap(a.battery_capacity) })
            .collect(),
    };
    ensure_valid(&instance)?;
    let prices = doc.prices.map(|p| PriceProfile::new(unwrap(p)));
    if let Some(p) = &prices {
        p.check_horizon(instance.horizon)?;
    }
    Ok((instance, prices))
}

pub fn load_instance(text: &str) -> Result<Instance> {
    load_document(text).map(|(instance, _)| instance)
}

pub fn save_document(instance: &Instance, prices: Option<&PriceProfile>) -> String {
    let doc = InstanceDoc {
        horizon: instance.horizon,
        nodes: instance.nodes.clone(),
        edges: instance
            .edges
            .iter()
            .map(|e| EdgeDoc { id: e.id.clone(), from: e.from.clone(), to: e.to.clone(), capacity: wrap(&e.capacity) })
            .collect(),
        demands: instance.demands.iter().map(|(k, v)| (k.clone(), wrap(v))).collect(),
        agents: instance
            .agents
            .iter()
            .map(|a| AgentDoc {
                id: a.id.clone(),
                location: a.location.clone(),
                battery_capacity: wrap(&a.battery_capacity),
            })
            .collect(),
        prices: prices.map(|p| wrap(p.values())),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    text.push('\n');
    text
}

pub fn save_instance(instance: &Instance) -> String {
    save_document(instance, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn every_named_instance_is_valid() {
        for id in PaperInstanceId::suite() {
            let (inst, prices) = paper_instance(id).unwrap();
            assert!(validate_instance(&inst).is_empty(), "{id}");
            assert_eq!(prices.len(), inst.horizon);
        }
        for horizon in 2..8 {
            paper_instance(PaperInstanceId::Fig5AscPos { horizon }).unwrap();
        }
        for horizon in 3..8 {
            paper_instance(PaperInstanceId::Fig7StrongPoa { horizon }).unwrap();
        }
    }

    #[test]
    fn parameters_are_checked() {
        assert!(paper_instance(PaperInstanceId::Fig5AscPos { horizon: 1 }).is_err());
        assert!(paper_instance(PaperInstanceId::Fig7StrongPoa { horizon: 2 }).is_err());
        assert!(paper_instance(PaperInstanceId::Fig6SupplySign { q: Quantity::ZERO, r: Quantity::ONE }).is_err());
    }

    #[test]
    fn ids_parse_and_print() {
        for id in PaperInstanceId::suite() {
            assert_eq!(id.to_string().parse::<PaperInstanceId>().unwrap(), id);
        }
        assert_eq!("fig5_asc_pos:6".parse::<PaperInstanceId>().unwrap(), PaperInstanceId::Fig5AscPos { horizon: 6 });
        assert_eq!(
            "fig6_supply_sign:2,1/2".parse::<PaperInstanceId>().unwrap(),
            PaperInstanceId::Fig6SupplySign { q: Quantity::from_integer(2), r: Quantity::new(1, 2) }
        );
        assert!("fig7_strong_poa:2".parse::<PaperInstanceId>().is_err());
        assert!("fig1:3".parse::<PaperInstanceId>().is_err());
        assert!("fig9".parse::<PaperInstanceId>().is_err());
    }

    #[test]
    fn fig7_edges_open_once() {
        let (inst, _) = paper_instance(PaperInstanceId::Fig7StrongPoa { horizon: 4 }).unwrap();
        assert_eq!(inst.nodes.len(), 3);
        assert_eq!(inst.agents.len(), 3);
        assert_eq!(inst.edges[0].capacity, ints(&[0, 1, 0, 0]));
        assert_eq!(inst.edges[1].capacity, ints(&[0, 0, 1, 0]));
        assert_eq!(inst.demand("v1", 0), Quantity::ONE);
        assert_eq!(inst.demand("v3", 3), -Quantity::ONE);
    }

    #[test]
    fn random_is_deterministic() {
        let params = RandomParams::default();
        assert_eq!(random_instance(7, &params).unwrap(), random_instance(7, &params).unwrap());
        let differs = (0..10).any(|s| random_instance(s, &params).unwrap() != random_instance(7, &params).unwrap());
        assert!(differs);
    }

    #[test]
    fn zero_density_means_no_demand() {
        let params = RandomParams { demand_density: Quantity::ZERO, ..RandomParams::default() };
        for seed in 0..20 {
            let inst = random_instance(seed, &params).unwrap();
            assert!(inst.demands.is_empty());
            assert!(inst.total_supply().is_zero());
        }
    }

    #[test]
    fn round_trip_named_instances() {
        for id in PaperInstanceId::suite() {
            let (inst, prices) = paper_instance(id).unwrap();
            assert_eq!(load_instance(&save_instance(&inst)).unwrap(), inst);
            let (back, p) = load_document(&save_document(&inst, Some(&prices))).unwrap();
            assert_eq!(back, inst);
            assert_eq!(p, Some(prices));
        }
    }

    #[test]
    fn fractional_capacity_is_exact() {
        let text = r#"{"T": 2, "nodes": ["u"], "agents": [{"id": "a", "location": "u", "battery_capacity": ["3/2"]}]}"#;
        let inst = load_instance(text).unwrap();
        assert_eq!(inst.agents[0].battery_capacity[0], Quantity::new(3, 2));
        assert!(save_instance(&inst).contains("\"3/2\""));
    }

    #[test]
    fn rejects_bad_documents() {
        let zero = r#"{"T": 0, "nodes": []}"#;
        assert!(matches!(load_instance(zero), Err(Error::InvalidInstance(_))));
        let unknown = r#"{"T": 1, "nodes": [], "colour": "red"}"#;
        match load_instance(unknown) {
            Err(Error::Format(msg)) => assert!(msg.contains("colour") && msg.contains("line")),
            other => panic!("unexpected {other:?}"),
        }
        let float = r#"{"T": 1, "nodes": ["u"], "demands": {"u": [1.5]}}"#;
        assert!(matches!(load_instance(float), Err(Error::Format(_))));
        let negative =
            r#"{"T": 2, "nodes": ["u"], "agents": [{"id": "a", "location": "u", "battery_capacity": [-1]}]}"#;
        assert!(matches!(load_instance(negative), Err(Error::InvalidInstance(_))));
        let prices = r#"{"T": 2, "nodes": ["u"], "prices": [1]}"#;
        assert!(matches!(load_document(prices), Err(Error::Prices(_))));
    }
}
