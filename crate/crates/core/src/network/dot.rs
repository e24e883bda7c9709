//! Graphviz rendering of a layer network.

use std::fmt::Write;

use super::build::{Direction, Layer, Network};
use crate::frontend::format_rule;

fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::Forward => "forward",
        Direction::Transposed => "transposed",
    }
}

pub fn layer_label(layer: &Layer) -> String {
    match layer {
        Layer::Fact { predicate, direction, .. } => format!("fact {predicate} ({})", direction_label(*direction)),
        Layer::Function { predicate, builtin } => format!("function {predicate} = {builtin}"),
        Layer::Empty { predicate } => format!("empty {predicate}"),
        Layer::Rule(r) => format!("rule {}", format_rule(&r.rule)),
        Layer::Literal { predicate, direction, .. } => {
            format!("literal {predicate} ({})", direction_label(*direction))
        }
    }
}

/// Layers as nodes; an edge points from each child layer to its consumer.
pub fn network_dot(net: &Network) -> String {
    let mut out = String::from("digraph network {\n  rankdir=BT;\n");
    for (i, layer) in net.layers.iter().enumerate() {
        let shape = match layer {
            Layer::Fact { .. } | Layer::Empty { .. } => "box",
            Layer::Function { .. } => "diamond",
            Layer::Rule(_) => "ellipse",
            Layer::Literal { .. } => "hexagon",
        };
        let label = layer_label(layer).replace('\\', "\\\\").replace('"', "\\\"");
        let _ = writeln!(out, "  l{i} [shape={shape}, label=\"{label}\"];");
    }
    for (i, layer) in net.layers.iter().enumerate() {
        match layer {
            Layer::Literal { children, .. } => {
                for c in children {
                    let _ = writeln!(out, "  l{} -> l{i};", c.0);
                }
            }
            Layer::Rule(r) => {
                let mut seen = Vec::new();
                for (index, dirs) in r.body_layers.iter().enumerate() {
                    for (k, d) in dirs.iter().enumerate() {
                        if let Some(c) = d {
                            if !seen.contains(&(c.0, k)) {
                                seen.push((c.0, k));
                                let dir = if k == 0 { "forward" } else { "transposed" };
                                let _ = writeln!(
                                    out,
                                    "  l{} -> l{i} [label=\"{} {dir}\"];",
                                    c.0, r.rule.body[index].predicate
                                );
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    for ((predicate, direction), id) in &net.roots {
        let _ = writeln!(
            out,
            "  root_{}_{} [shape=plaintext, label=\"?- {predicate} ({})\"];\n  l{} -> root_{}_{};",
            predicate.name,
            id.0,
            direction_label(*direction),
            id.0,
            predicate.name,
            id.0
        );
    }
    out.push_str("}\n");
    out
}
