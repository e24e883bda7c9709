//! Abstract syntax for weighted logic programs.

use std::fmt;

/// A term inside an atom.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Constant(String),
    Variable(String),
    Number(f64),
}

impl Term {
    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Number(_))
    }

    pub fn as_constant(&self) -> Option<&str> {
        match self {
            Term::Constant(name) => Some(name),
            _ => None,
        }
    }
}

/// Predicate name plus arity, conventionally written `name/arity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateId {
    pub name: String,
    pub arity: usize,
}

impl PredicateId {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredicateId {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, terms: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            terms,
        }
    }

    pub fn arity(&self) -> usize {
        self.terms.len()
    }

    pub fn id(&self) -> PredicateId {
        PredicateId::new(self.predicate.clone(), self.terms.len())
    }

    pub fn is_ground(&self) -> bool {
        !self.terms.iter().any(Term::is_variable)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v.as_str()),
            _ => None,
        })
    }
}

/// A ground atom with a weight. Weight defaults to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Fact {
    pub atom: Atom,
    pub weight: f64,
}

impl Fact {
    pub fn new(atom: Atom, weight: f64) -> Self {
        Fact { atom, weight }
    }

    /// True when the final argument is a number, i.e. an attribute fact.
    pub fn is_attribute(&self) -> bool {
        self.atom.arity() == 2 && self.atom.terms[1].is_number()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

/// How a learnable predicate's coordinates are created.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnableInit {
    /// Only the declared facts become parameters.
    Declared,
    /// Every coordinate of the tensor becomes a parameter; undeclared ones
    /// are sampled uniformly from [-0.5, 0.5].
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Learnable {
        predicate: PredicateId,
        init: LearnableInit,
    },
    Function {
        predicate: PredicateId,
        builtin: String,
    },
    RecursionDepth(usize),
    Combiner {
        and: String,
        or: String,
    },
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Source positions of every clause, parallel to the clause lists of a
/// [`Program`]. Programs built in code carry no positions.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub facts: Vec<Span>,
    pub rules: Vec<Span>,
    pub directives: Vec<Span>,
}

#[derive(Debug, Clone, Default)]
pub struct Program {
    pub facts: Vec<Fact>,
    pub rules: Vec<Rule>,
    pub directives: Vec<Directive>,
    pub spans: SourceMap,
}

/// Structural equality; source positions are ignored.
impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.facts == other.facts && self.rules == other.rules && self.directives == other.directives
    }
}

pub const DEFAULT_RECURSION_DEPTH: usize = 1;

impl Program {
    pub fn is_empty(&self) -> bool {
        self.facts.is_empty() && self.rules.is_empty()
    }

    /// Appends another program's clauses, as if the sources were concatenated.
    pub fn extend(&mut self, other: Program) {
        self.facts.extend(other.facts);
        self.rules.extend(other.rules);
        self.directives.extend(other.directives);
        self.spans.facts.extend(other.spans.facts);
        self.spans.rules.extend(other.spans.rules);
        self.spans.directives.extend(other.spans.directives);
    }

    /// The last `#recursion_depth` directive wins; default 1.
    pub fn recursion_depth(&self) -> usize {
        self.directives
            .iter()
            .rev()
            .find_map(|d| match d {
                Directive::RecursionDepth(k) => Some(*k),
                _ => None,
            })
            .unwrap_or(DEFAULT_RECURSION_DEPTH)
    }

    pub fn learnable(&self, predicate: &PredicateId) -> Option<LearnableInit> {
        self.directives.iter().rev().find_map(|d| match d {
            Directive::Learnable { predicate: p, init } if p == predicate => Some(*init),
            _ => None,
        })
    }

    pub fn function(&self, predicate: &PredicateId) -> Option<&str> {
        self.directives.iter().rev().find_map(|d| match d {
            Directive::Function { predicate: p, builtin } if p == predicate => Some(builtin.as_str()),
            _ => None,
        })
    }

    /// The (and, or) combiner names, defaulting to product and sum.
    pub fn combiners(&self) -> (&str, &str) {
        self.directives
            .iter()
            .rev()
            .find_map(|d| match d {
                Directive::Combiner { and, or } => Some((and.as_str(), or.as_str())),
                _ => None,
            })
            .unwrap_or(("product", "sum"))
    }

    pub fn fact_span(&self, index: usize) -> Option<Span> {
        self.spans.facts.get(index).copied()
    }

    pub fn rule_span(&self, index: usize) -> Option<Span> {
        self.spans.rules.get(index).copied()
    }
}
