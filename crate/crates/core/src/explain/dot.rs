use std::fmt::Write;

use super::ConceptActivationMap;
use crate::graph::Graph;

fn normalise(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a CAM as an undirected DOT graph. Fill shade follows the min-max
/// normalised node mask, pen width the normalised edge mask, and nodes above the
/// concept threshold are drawn as double circles.
pub fn cam_to_dot(cam: &ConceptActivationMap, graph: &Graph, alphabet: &[String]) -> String {
    let mut out = String::new();
    let shade = normalise(&cam.node_mask);
    let widths = normalise(&cam.edge_mask.iter().map(|e| e.weight).collect::<Vec<_>>());
    let _ = writeln!(out, "graph cam_class{}_neuron{}_graph{} {{", cam.class, cam.neuron, cam.graph);
    let _ = writeln!(out, "  label=\"{}\";", escape(&cam.formula.to_string()));
    let _ = writeln!(out, "  node [style=filled, fontname=\"Helvetica\"];");
    for (v, &t) in shade.iter().enumerate() {
        let level = (255.0 * (1.0 - t)).round() as u8;
        let shape = if cam.concept_nodes.binary_search(&v).is_ok() {
            "doublecircle"
        } else {
            "circle"
        };
        let label = graph
            .node_labels()
            .and_then(|l| alphabet.get(l[v]))
            .map_or_else(|| v.to_string(), |name| format!("{v}:{name}"));
        let _ = writeln!(
            out,
            "  n{v} [label=\"{}\", shape={shape}, fillcolor=\"#ff{level:02x}{level:02x}\", eta=\"{:.6}\"];",
            escape(&label),
            cam.node_mask[v]
        );
    }
    for (e, &t) in cam.edge_mask.iter().zip(&widths) {
        let _ = writeln!(
            out,
            "  n{} -- n{} [penwidth={:.3}, eta=\"{:.6}\"];",
            e.source,
            e.target,
            1.0 + 4.0 * t,
            e.weight
        );
    }
    out.push_str("}\n");
    out
}
