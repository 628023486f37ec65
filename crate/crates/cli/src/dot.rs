//! Graphviz rendering of the time-expanded network.

use std::fmt::Write;

use chargegame::model::{EdgeKind, NodeKind};
use chargegame::{saturated_in_all_max_flows, ExpandedGraph, Flow};

const ADMISSIBLE: &str = "color=forestgreen, penwidth=2";
const INADMISSIBLE: &str = "color=red, style=dashed, penwidth=2";
const BATTERY: &str = "color=steelblue";

fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Edges are labeled `f/κ` (just `κ` without a flow). With a maximum flow,
/// transaction edges are colored by whether every maximum flow saturates
/// them. Output depends only on the graph and flow.
pub fn export_dot(graph: &ExpandedGraph, flow: Option<&Flow>) -> anyhow::Result<String> {
    let mut out = String::new();
    writeln!(out, "digraph chargegame {{")?;
    writeln!(out, "  rankdir=LR;")?;
    writeln!(out, "  node [shape=circle, fontsize=10];")?;
    if graph.edges().is_empty() {
        writeln!(out, "}}")?;
        return Ok(out);
    }

    writeln!(out, "  {} [shape=doublecircle];", quote(&graph.node_label(0)))?;
    writeln!(out, "  {} [shape=doublecircle];", quote(&graph.node_label(1)))?;
    for t in 0..graph.horizon() {
        writeln!(out, "  subgraph cluster_step_{t} {{")?;
        writeln!(out, "    label={};", quote(&format!("t = {}", t + 1)))?;
        for (id, kind) in graph.nodes().iter().enumerate() {
            if matches!(kind, NodeKind::Grid { step, .. } if *step == t) {
                writeln!(out, "    {};", quote(&graph.node_label(id)))?;
            }
        }
        writeln!(out, "  }}")?;
    }
    for (b, agent) in graph.agent_ids().iter().enumerate() {
        writeln!(out, "  subgraph cluster_battery_{b} {{")?;
        writeln!(out, "    label={};", quote(&format!("battery {agent}")))?;
        writeln!(out, "    node [shape=box];")?;
        for (id, kind) in graph.nodes().iter().enumerate() {
            if matches!(kind, NodeKind::Battery { agent, .. } if *agent == b) {
                writeln!(out, "    {};", quote(&graph.node_label(id)))?;
            }
        }
        writeln!(out, "  }}")?;
    }

    for (id, e) in graph.edges().iter().enumerate() {
        let label = match flow {
            Some(f) => format!("{}/{}", f.on(id), e.capacity),
            None => e.capacity.to_string(),
        };
        let style = match e.kind {
            EdgeKind::Charge { .. } | EdgeKind::Discharge { .. } => match flow {
                Some(f) if saturated_in_all_max_flows(graph, f, id)? => ADMISSIBLE,
                Some(_) => INADMISSIBLE,
                None => "style=dotted",
            },
            EdgeKind::Battery { .. } => BATTERY,
            EdgeKind::Source { .. } | EdgeKind::Sink { .. } => "color=gray50",
            EdgeKind::Grid { .. } => "color=black",
        };
        writeln!(
            out,
            "  {} -> {} [label={}, {style}];",
            quote(&graph.node_label(e.tail)),
            quote(&graph.node_label(e.head)),
            quote(&label)
        )?;
    }
    writeln!(out, "}}")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chargegame::model::apply_strategy;
    use chargegame::{build_expanded_graph, max_flow, paper_instance, PaperInstanceId, StrategyProfile};

    fn fig2c() -> (ExpandedGraph, Flow) {
        let (inst, _) = paper_instance(PaperInstanceId::Fig2FlowExample).unwrap();
        let profile = StrategyProfile::from_integers(&[&[1, -1], &[1, -1], &[1, -1]]);
        let graph = apply_strategy(&build_expanded_graph(&inst).unwrap(), &profile).unwrap();
        let flow = max_flow(&graph).flow;
        (graph, flow)
    }

    fn line_of(dot: &str, from: &str, to: &str) -> String {
        let needle = format!("\"{from}\" -> \"{to}\"");
        dot.lines().find(|l| l.contains(&needle)).unwrap_or_else(|| panic!("no edge {needle}")).to_string()
    }

    #[test]
    fn inadmissible_edges_are_marked() {
        let (graph, flow) = fig2c();
        let dot = export_dot(&graph, Some(&flow)).unwrap();
        assert!(line_of(&dot, "u@1", "bat:a@1").contains(INADMISSIBLE));
        assert!(line_of(&dot, "z@1", "bat:c@1").contains(ADMISSIBLE));
        assert!(line_of(&dot, "bat:c@2", "z@2").contains(ADMISSIBLE));
        assert!(dot.contains("cluster_battery_2"));
    }

    #[test]
    fn empty_graph_is_header_only() {
        let inst = chargegame::Instance {
            horizon: 1,
            nodes: vec![],
            edges: vec![],
            demands: Default::default(),
            agents: vec![],
        };
        let dot = export_dot(&build_expanded_graph(&inst).unwrap(), None).unwrap();
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 0);
        assert!(dot.starts_with("digraph chargegame {"));
        assert!(!dot.contains("cluster"));
    }

    #[test]
    fn output_is_deterministic() {
        let (graph, flow) = fig2c();
        assert_eq!(export_dot(&graph, Some(&flow)).unwrap(), export_dot(&graph, Some(&flow)).unwrap());
    }
}
