//! Graphviz renderings of compiled rules.

use std::fmt::Write;

use super::graph::{LiteralRole, TermGraph};
use super::paths::{RulePathPlan, Step};
use crate::frontend::{format_atom, format_term, Rule};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n"))
}

/// Undirected term graph: edge literals as edges, loops as self-edges and
/// ground literals as free-standing boxes.
pub fn term_graph_dot(rule: &Rule, graph: &TermGraph) -> String {
    let mut out = String::from("graph terms {\n");
    for (i, t) in graph.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label={}];", quote(&format_term(t)));
    }
    for (i, role) in graph.roles.iter().enumerate() {
        let label = quote(&format_atom(&rule.body[i]));
        match *role {
            LiteralRole::Edge(a, b) => {
                let _ = writeln!(out, "  n{a} -- n{b} [label={label}];");
            }
            LiteralRole::Loop(a) => {
                let _ = writeln!(out, "  n{a} -- n{a} [label={label}];");
            }
            LiteralRole::Ground => {
                let _ = writeln!(out, "  g{i} [shape=box, label={label}];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Every path drawn as a branch of a tree rooted at its input.
pub fn path_tree_dot(rule: &Rule, plan: &RulePathPlan) -> String {
    let mut out = String::from("digraph paths {\n");
    let mut next = 0usize;
    let mut roots: Vec<(usize, usize)> = Vec::new();
    for path in &plan.paths {
        let start = path.nodes[0];
        let root = match roots.iter().find(|(n, _)| *n == start) {
            Some(&(_, id)) => id,
            None => {
                let id = next;
                next += 1;
                let _ = writeln!(out, "  t{id} [label={}];", quote(&format_term(&plan.graph.nodes[start])));
                roots.push((start, id));
                id
            }
        };
        let mut prev = root;
        for (k, step) in path.steps.iter().enumerate() {
            let node = path.nodes[k + 1];
            let id = next;
            next += 1;
            let mut label = format_term(&plan.graph.nodes[node]);
            if let Some(loops) = path.loops.get(k + 1) {
                for &l in loops {
                    label.push_str(&format!("\n{}", format_atom(&rule.body[l])));
                }
            }
            let _ = writeln!(out, "  t{id} [label={}];", quote(&label));
            let (edge_label, style) = match step {
                Step::Literal(i) => (rule.body[*i].predicate.clone(), "solid"),
                Step::Any => ("any".to_string(), "dashed"),
            };
            let _ = writeln!(out, "  t{prev} -> t{id} [label={}, style={style}];", quote(&edge_label));
            prev = id;
        }
    }
    for &g in &plan.disconnected_grounds {
        let _ = writeln!(out, "  g{g} [shape=box, label={}];", quote(&format_atom(&rule.body[g])));
    }
    out.push_str("}\n");
    out
}
