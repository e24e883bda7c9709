//! Rule compilation: term graphs, path search and DAG construction.

mod dag;
pub mod dot;
mod graph;
mod paths;

pub use dag::{merge_into_dag, AnyLiteral, DagEdge, DagEdgeKind, RuleDag};
pub use graph::{build_term_graph, LiteralRole, TermGraph};
pub use paths::{find_clause_paths, find_paths, CompileError, Path, RulePathPlan, Step, DEFAULT_MAX_PARTIAL_PATHS};

use crate::frontend::Rule;

/// A rule's path plan together with its per-input DAGs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledRule {
    pub plan: RulePathPlan,
    pub dags: Vec<RuleDag>,
}

impl CompiledRule {
    /// True when no DAG has edges, i.e. the rule only filters its input.
    pub fn is_local(&self) -> bool {
        self.dags.iter().all(RuleDag::is_trivial)
    }
}

pub fn compile_rule(rule: &Rule, dest_index: usize, limit: usize) -> Result<CompiledRule, CompileError> {
    let plan = find_clause_paths(rule, dest_index, limit)?;
    let dags = merge_into_dag(&plan);
    Ok(CompiledRule { plan, dags })
}
