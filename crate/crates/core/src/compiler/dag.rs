//! Merging the paths of a rule into one directed acyclic graph per input.

use super::graph::LiteralRole;
use super::paths::{RulePathPlan, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DagEdgeKind {
    /// A body literal, traversed against its argument order when `transposed`.
    Literal { index: usize, transposed: bool },
    /// An `any` edge from an input to the start of a path that reaches the
    /// destination; evaluates to the all-ones vector.
    FreeAny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DagEdge {
    pub from: usize,
    pub to: usize,
    pub kind: DagEdgeKind,
}

/// Merged `any` edges into the destination: `any(t1, ..., tk, destination)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyLiteral {
    pub terms: Vec<usize>,
    pub destination: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDag {
    pub source: usize,
    pub destination: usize,
    /// Nodes in a topological order; ties follow first appearance in the paths.
    pub order: Vec<usize>,
    pub edges: Vec<DagEdge>,
    pub any: Option<AnyLiteral>,
    /// Edges dropped because they would close a directed cycle.
    pub dropped: Vec<DagEdge>,
}

impl RuleDag {
    pub fn incoming(&self, node: usize) -> impl Iterator<Item = &DagEdge> {
        self.edges.iter().filter(move |e| e.to == node)
    }

    /// True when the only path is the bare input node.
    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty() && self.any.is_none()
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            for e in self.edges.iter().filter(|e| e.from == n) {
                if !seen.contains(&e.to) {
                    seen.push(e.to);
                    stack.push(e.to);
                }
            }
        }
        false
    }
}

/// Builds one DAG per input of the plan. Identical edges are stored once and
/// the `any` edges into the destination are merged into a single literal.
pub fn merge_into_dag(plan: &RulePathPlan) -> Vec<RuleDag> {
    plan.sources
        .iter()
        .map(|&source| {
            let mut dag = RuleDag {
                source,
                destination: plan.destination,
                order: Vec::new(),
                edges: Vec::new(),
                any: None,
                dropped: Vec::new(),
            };
            let mut appearance: Vec<usize> = Vec::new();
            let mut any_terms: Vec<usize> = Vec::new();
            for path in plan.paths.iter().filter(|p| p.nodes[0] == source) {
                for &n in &path.nodes {
                    if !appearance.contains(&n) {
                        appearance.push(n);
                    }
                }
                for (k, step) in path.steps.iter().enumerate() {
                    let (from, to) = (path.nodes[k], path.nodes[k + 1]);
                    let kind = match *step {
                        Step::Any if to == plan.destination => {
                            if !any_terms.contains(&from) {
                                any_terms.push(from);
                            }
                            continue;
                        }
                        Step::Any => DagEdgeKind::FreeAny,
                        Step::Literal(index) => {
                            let LiteralRole::Edge(first, _) = plan.graph.roles[index] else {
                                unreachable!("path step on a non-edge literal")
                            };
                            DagEdgeKind::Literal {
                                index,
                                transposed: first != from,
                            }
                        }
                    };
                    let edge = DagEdge { from, to, kind };
                    if dag.edges.contains(&edge) || dag.dropped.contains(&edge) {
                        continue;
                    }
                    if dag.reaches(to, from) {
                        dag.dropped.push(edge);
                    } else {
                        dag.edges.push(edge);
                    }
                }
            }
            if !any_terms.is_empty() {
                dag.any = Some(AnyLiteral {
                    terms: any_terms,
                    destination: plan.destination,
                });
            }
            dag.order = topological(&appearance, &dag.edges);
            dag
        })
        .collect()
}

fn topological(appearance: &[usize], edges: &[DagEdge]) -> Vec<usize> {
    let mut indegree: Vec<usize> = appearance
        .iter()
        .map(|&n| edges.iter().filter(|e| e.to == n).count())
        .collect();
    let mut order = Vec::with_capacity(appearance.len());
    let mut done = vec![false; appearance.len()];
    while order.len() < appearance.len() {
        let k = (0..appearance.len())
            .find(|&k| !done[k] && indegree[k] == 0)
            .expect("edges form a DAG");
        done[k] = true;
        let n = appearance[k];
        order.push(n);
        for e in edges.iter().filter(|e| e.from == n) {
            let j = appearance.iter().position(|&m| m == e.to).unwrap();
            indegree[j] -= 1;
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::paths::{find_clause_paths, DEFAULT_MAX_PARTIAL_PATHS};
    use crate::frontend::parse_program;

    fn dag(src: &str) -> (RulePathPlan, RuleDag) {
        let r = parse_program(src).unwrap().rules.remove(0);
        let plan = find_clause_paths(&r, r.head.arity() - 1, DEFAULT_MAX_PARTIAL_PATHS).unwrap();
        let mut dags = merge_into_dag(&plan);
        (plan, dags.remove(0))
    }

    #[test]
    fn worked_rule_shares_edges() {
        let (plan, d) = dag("target(X, Y) :- p0(X, Z), p1(X, Z), p2(Z, Y), p3(X, V), p4(U, Y), p5(Z), w.");
        let g = &plan.graph;
        let name = |n: usize| crate::frontend::format_term(&g.nodes[n]);
        let p2_edges = d
            .edges
            .iter()
            .filter(|e| e.kind == DagEdgeKind::Literal { index: 2, transposed: false })
            .count();
        assert_eq!(p2_edges, 1);
        let any = d.any.as_ref().unwrap();
        let terms: Vec<String> = any.terms.iter().map(|&n| name(n)).collect();
        assert_eq!(terms, ["V"]);
        assert_eq!(name(any.destination), "Y");
        // X -any-> U is an input-side edge.
        assert!(d.edges.iter().any(|e| e.kind == DagEdgeKind::FreeAny && name(e.to) == "U"));
        // p4(U, Y) is traversed in argument order.
        assert!(d
            .edges
            .contains(&DagEdge { from: 4, to: 1, kind: DagEdgeKind::Literal { index: 4, transposed: false } }));
        let order: Vec<String> = d.order.iter().map(|&n| name(n)).collect();
        assert_eq!(order, ["X", "Z", "V", "U", "Y"]);
    }

    #[test]
    fn plain_plan_is_unchanged() {
        let (_, d) = dag("h(X, Y) :- p(X, Z), q(Z, Y).");
        assert_eq!(d.edges.len(), 2);
        assert!(d.any.is_none());
        assert!(d.dropped.is_empty());
    }

    #[test]
    fn two_dangling_paths_merge() {
        let (plan, d) = dag("h(X, Y) :- p(X, V), q(X, W), r(X, Y).");
        let any = d.any.unwrap();
        let names: Vec<String> = any
            .terms
            .iter()
            .chain([&any.destination])
            .map(|&n| crate::frontend::format_term(&plan.graph.nodes[n]))
            .collect();
        assert_eq!(names, ["V", "W", "Y"]);
    }

    #[test]
    fn transposed_traversal() {
        let (_, d) = dag("h(X, Y) :- p(Y, X).");
        assert_eq!(d.edges[0].kind, DagEdgeKind::Literal { index: 0, transposed: true });
    }

    #[test]
    fn cycle_closing_edge_is_dropped() {
        let (_, d) = dag("h(X, Y) :- a(X, Z), b(Z, W), c(W, Y), d(X, W), e(Z, Y).");
        assert!(!d.dropped.is_empty());
        for e in &d.dropped {
            assert!(d.reaches(e.to, e.from));
        }
        assert_eq!(d.order.len(), 4);
    }
}
