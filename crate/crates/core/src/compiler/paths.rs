//! Breadth-first path search between the head terms of a rule.

use std::collections::BTreeSet;

use thiserror::Error;

use super::graph::{build_term_graph, LiteralRole, TermGraph};
use crate::frontend::{format_atom, format_term, Rule};

pub const DEFAULT_MAX_PARTIAL_PATHS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("rule `{0}` has a propositional head")]
    PropositionalHead(String),
    #[error("destination index {index} is out of range for head `{head}`")]
    BadDestination { head: String, index: usize },
    #[error("path search for rule `{rule}` exceeded {limit} partial paths")]
    PathExplosion { rule: String, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    /// Traversal of the body literal with this index.
    Literal(usize),
    Any,
}

/// Alternating node and step sequence. `loops[k]` lists the loop literals
/// attached to `nodes[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub steps: Vec<Step>,
    pub loops: Vec<Vec<usize>>,
}

impl Path {
    fn start(node: usize) -> Self {
        Path {
            nodes: vec![node],
            steps: Vec::new(),
            loops: Vec::new(),
        }
    }

    fn extended(&self, step: Step, node: usize) -> Self {
        let mut p = self.clone();
        p.steps.push(step);
        p.nodes.push(node);
        p
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    pub fn reversed(&self) -> Path {
        let mut p = self.clone();
        p.nodes.reverse();
        p.steps.reverse();
        p.loops.reverse();
        p
    }

    fn same_route(&self, other: &Path) -> bool {
        self.nodes == other.nodes && self.steps == other.steps
    }

    /// Renders as `X -p0-> Z[p5] -p2-> Y`.
    pub fn describe(&self, rule: &Rule, graph: &TermGraph) -> String {
        let mut out = String::new();
        for (k, &node) in self.nodes.iter().enumerate() {
            if k > 0 {
                match self.steps[k - 1] {
                    Step::Literal(i) => out.push_str(&format!(" -{}-> ", rule.body[i].predicate)),
                    Step::Any => out.push_str(" -any-> "),
                }
            }
            out.push_str(&format_term(&graph.nodes[node]));
            if let Some(loops) = self.loops.get(k) {
                if !loops.is_empty() {
                    let names: Vec<String> = loops.iter().map(|&i| format_atom(&rule.body[i])).collect();
                    out.push_str(&format!("[{}]", names.join(", ")));
                }
            }
        }
        out
    }
}

/// Breadth-first search for every path from `source` to `destination`.
///
/// Extensions that revisit a node of the path or enter another source are
/// skipped; a path that cannot be extended is completed with an `any` step.
/// Edge literals used by some extension are added to `visited`.
pub fn find_paths(
    graph: &TermGraph,
    source: usize,
    destination: usize,
    visited: &mut BTreeSet<usize>,
    sources_set: &BTreeSet<usize>,
    limit: usize,
) -> Option<Vec<Path>> {
    let mut completed: Vec<Path> = Vec::new();
    let mut partial = std::collections::VecDeque::from([Path::start(source)]);
    let mut created = 1usize;
    while let Some(path) = partial.pop_front() {
        let end = path.end();
        let trivial = path.steps.is_empty();
        if end == destination && !(trivial && graph.edges_at(end).next().is_some()) {
            completed.push(path);
            continue;
        }
        let mut added = false;
        for (lit, new_end) in graph.edges_at(end) {
            if path.nodes.contains(&new_end) || sources_set.contains(&new_end) {
                continue;
            }
            let new_path = path.extended(Step::Literal(lit), new_end);
            if new_end == destination {
                completed.push(new_path);
            } else {
                created += 1;
                if created > limit {
                    return None;
                }
                partial.push_back(new_path);
            }
            visited.insert(lit);
            added = true;
        }
        if !added {
            if trivial && end == destination {
                completed.push(path);
            } else {
                completed.push(path.extended(Step::Any, destination));
            }
        }
    }
    for p in &mut completed {
        p.loops = p.nodes.iter().map(|&n| graph.loops_at(n)).collect();
    }
    Some(completed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulePathPlan {
    pub graph: TermGraph,
    /// Input nodes, in head order.
    pub sources: Vec<usize>,
    pub destination: usize,
    pub paths: Vec<Path>,
    /// Ground body literals, multiplied into the result as scalars.
    pub disconnected_grounds: Vec<usize>,
    /// Non-ground body literals no path reaches; they do not contribute.
    pub unreachable: Vec<usize>,
}

impl RulePathPlan {
    pub fn is_unary(&self) -> bool {
        self.sources == [self.destination]
    }
}

fn push_unique(all: &mut Vec<Path>, path: Path) {
    if !all.iter().any(|p| p.same_route(&path)) {
        all.push(path);
    }
}

/// Finds the paths from the head inputs to the head term at `dest_index`,
/// plus the disconnected ground literals of the body.
pub fn find_clause_paths(rule: &Rule, dest_index: usize, limit: usize) -> Result<RulePathPlan, CompileError> {
    let head = &rule.head;
    if head.terms.is_empty() {
        return Err(CompileError::PropositionalHead(format_atom(head)));
    }
    if dest_index >= head.terms.len() {
        return Err(CompileError::BadDestination {
            head: format_atom(head),
            index: dest_index,
        });
    }
    let explosion = || CompileError::PathExplosion {
        rule: crate::frontend::format_rule(rule),
        limit,
    };
    let graph = build_term_graph(rule);
    let head_nodes: Vec<usize> = head.terms.iter().map(|t| graph.node(t).unwrap()).collect();
    let destination = head_nodes[dest_index];
    let mut sources: Vec<usize> = Vec::new();
    let compute_reverse = head_nodes.len() > 1;
    if compute_reverse {
        for (k, &n) in head_nodes.iter().enumerate() {
            if k != dest_index && !sources.contains(&n) {
                sources.push(n);
            }
        }
    } else {
        sources.push(destination);
    }
    let sources_set: BTreeSet<usize> = sources.iter().copied().collect();

    let mut all_paths: Vec<Path> = Vec::new();
    let mut all_visited: BTreeSet<usize> = BTreeSet::new();
    for &source in &sources {
        let mut visited = BTreeSet::new();
        let paths = find_paths(&graph, source, destination, &mut visited, &sources_set, limit).ok_or_else(explosion)?;
        for p in paths {
            push_unique(&mut all_paths, p);
        }
        all_visited.extend(visited);
    }

    if compute_reverse && graph.edge_literals().any(|l| !all_visited.contains(&l)) {
        for &source in &sources {
            let blocked: BTreeSet<usize> = head_nodes.iter().copied().filter(|&n| n != source).collect();
            let backwards =
                find_paths(&graph, destination, source, &mut all_visited, &blocked, limit).ok_or_else(explosion)?;
            for p in backwards {
                push_unique(&mut all_paths, p.reversed());
            }
        }
    }

    let mut used_literals = BTreeSet::new();
    let mut used_nodes = BTreeSet::new();
    for p in &all_paths {
        used_nodes.extend(p.nodes.iter().copied());
        used_literals.extend(p.steps.iter().filter_map(|s| match s {
            Step::Literal(i) => Some(*i),
            Step::Any => None,
        }));
    }
    let unreachable = graph
        .roles
        .iter()
        .enumerate()
        .filter(|(i, role)| match role {
            LiteralRole::Edge(..) => !used_literals.contains(i),
            LiteralRole::Loop(n) => !used_nodes.contains(n),
            LiteralRole::Ground => false,
        })
        .map(|(i, _)| i)
        .collect();

    Ok(RulePathPlan {
        disconnected_grounds: graph.grounds(),
        graph,
        sources,
        destination,
        paths: all_paths,
        unreachable,
    })
}
