//! The undirected term graph of a rule.

use crate::frontend::{Rule, Term};

/// Role of a body literal in the term graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralRole {
    /// Connects two distinct terms.
    Edge(usize, usize),
    /// Attached to a single term: unary atoms, `p(X, X)` and functions.
    Loop(usize),
    /// No variables at all.
    Ground,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermGraph {
    /// Distinct terms of the rule, head terms first.
    pub nodes: Vec<Term>,
    /// One role per body literal, in body order.
    pub roles: Vec<LiteralRole>,
}

impl TermGraph {
    pub fn node(&self, term: &Term) -> Option<usize> {
        self.nodes.iter().position(|t| t == term)
    }

    /// Body indices of edge literals touching `node`, in body order.
    pub fn edges_at(&self, node: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.roles.iter().enumerate().filter_map(move |(i, r)| match *r {
            LiteralRole::Edge(a, b) if a == node => Some((i, b)),
            LiteralRole::Edge(a, b) if b == node => Some((i, a)),
            _ => None,
        })
    }

    pub fn edge_literals(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, LiteralRole::Edge(..)))
            .map(|(i, _)| i)
    }

    /// Loop literals attached to `node`, in body order.
    pub fn loops_at(&self, node: usize) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == LiteralRole::Loop(node))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn grounds(&self) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == LiteralRole::Ground)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Builds the term graph of a validated rule (body literals of arity at most two).
pub fn build_term_graph(rule: &Rule) -> TermGraph {
    fn intern(t: &Term, nodes: &mut Vec<Term>) -> usize {
        match nodes.iter().position(|n| n == t) {
            Some(i) => i,
            None => {
                nodes.push(t.clone());
                nodes.len() - 1
            }
        }
    }
    let mut nodes: Vec<Term> = Vec::new();
    for t in &rule.head.terms {
        intern(t, &mut nodes);
    }
    let mut roles = Vec::with_capacity(rule.body.len());
    for lit in &rule.body {
        if lit.is_ground() {
            roles.push(LiteralRole::Ground);
            continue;
        }
        let mut ids: Vec<usize> = Vec::new();
        for t in &lit.terms {
            let id = intern(t, &mut nodes);
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        roles.push(match ids.as_slice() {
            [a] => LiteralRole::Loop(*a),
            [a, b] => LiteralRole::Edge(*a, *b),
            _ => panic!("body literal with more than two distinct terms"),
        });
    }
    TermGraph { nodes, roles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn rule(src: &str) -> Rule {
        parse_program(src).unwrap().rules.remove(0)
    }

    #[test]
    fn classifies_literals() {
        let r = rule("target(X, Y) :- p0(X, Z), p1(X, Z), p2(Z, Y), p3(X, V), p4(U, Y), p5(Z), w.");
        let g = build_term_graph(&r);
        let names: Vec<String> = g.nodes.iter().map(crate::frontend::format_term).collect();
        assert_eq!(names, ["X", "Y", "Z", "V", "U"]);
        assert_eq!(
            g.roles,
            vec![
                LiteralRole::Edge(0, 2),
                LiteralRole::Edge(0, 2),
                LiteralRole::Edge(2, 1),
                LiteralRole::Edge(0, 3),
                LiteralRole::Edge(4, 1),
                LiteralRole::Loop(2),
                LiteralRole::Ground,
            ]
        );
        assert_eq!(g.loops_at(2), vec![5]);
        assert_eq!(g.grounds(), vec![6]);
    }

    #[test]
    fn constants_are_nodes() {
        let g = build_term_graph(&rule("h(X, Y) :- p(X, a)."));
        assert_eq!(g.nodes[2], Term::Constant("a".into()));
        assert_eq!(g.roles, vec![LiteralRole::Edge(0, 2)]);
    }

    #[test]
    fn reflexive_literal_is_a_loop() {
        let g = build_term_graph(&rule("h(X, Y) :- p(X, Y), q(X, X), r(a, b)."));
        assert_eq!(
            g.roles,
            vec![LiteralRole::Edge(0, 1), LiteralRole::Loop(0), LiteralRole::Ground]
        );
    }
}
