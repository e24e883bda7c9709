//! Static checks over a parsed program.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::ast::{Directive, PredicateId, Program, Span, Term};
use super::emit::format_atom;
use crate::autodiff::Builtin;
use crate::network::Combiners;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Option<Span>,
}

impl Diagnostic {
    fn error(message: impl Into<String>, span: Option<Span>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.span {
            Some(span) => write!(f, "{span}: {level}: {}", self.message),
            None => write!(f, "{level}: {}", self.message),
        }
    }
}

/// Predicates whose facts carry numeric second arguments.
pub fn attribute_predicates(program: &Program) -> HashSet<PredicateId> {
    program
        .facts
        .iter()
        .filter(|f| f.is_attribute())
        .map(|f| f.atom.id())
        .collect()
}

pub fn validate_program(program: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if program.is_empty() {
        out.push(Diagnostic::error("program has no rules or facts", None));
    }
    check_arities(program, &mut out);
    check_directives(program, &mut out);
    check_attributes(program, &mut out);
    check_rule_bodies(program, &mut out);
    out
}

fn check_arities(program: &Program, out: &mut Vec<Diagnostic>) {
    // name -> arity -> first place it was seen
    let mut uses: BTreeMap<&str, BTreeMap<usize, Option<Span>>> = BTreeMap::new();
    for (i, f) in program.facts.iter().enumerate() {
        uses.entry(&f.atom.predicate)
            .or_default()
            .entry(f.atom.arity())
            .or_insert(program.fact_span(i));
    }
    for (i, r) in program.rules.iter().enumerate() {
        for atom in std::iter::once(&r.head).chain(r.body.iter()) {
            uses.entry(&atom.predicate)
                .or_default()
                .entry(atom.arity())
                .or_insert(program.rule_span(i));
        }
    }
    for (i, d) in program.directives.iter().enumerate() {
        let pred = match d {
            Directive::Learnable { predicate, .. } | Directive::Function { predicate, .. } => predicate,
            _ => continue,
        };
        uses.entry(&pred.name)
            .or_default()
            .entry(pred.arity)
            .or_insert(program.spans.directives.get(i).copied());
    }
    for (name, arities) in uses {
        if arities.len() > 1 {
            let list: Vec<String> = arities.keys().map(|a| format!("{name}/{a}")).collect();
            let span = arities.values().flatten().max_by_key(|s| (s.line, s.column)).copied();
            out.push(Diagnostic::error(
                format!("predicate `{name}` is used with inconsistent arities: {}", list.join(", ")),
                span,
            ));
        }
    }
}

fn check_directives(program: &Program, out: &mut Vec<Diagnostic>) {
    let fact_preds: HashSet<PredicateId> = program.facts.iter().map(|f| f.atom.id()).collect();
    let head_preds: HashSet<PredicateId> = program.rules.iter().map(|r| r.head.id()).collect();
    let mut functions = HashSet::new();
    for (i, d) in program.directives.iter().enumerate() {
        let span = program.spans.directives.get(i).copied();
        match d {
            Directive::Function { predicate, builtin } => {
                functions.insert(predicate.clone());
                if Builtin::from_name(builtin).is_none() {
                    out.push(Diagnostic::error(format!("unknown builtin `{builtin}`"), span));
                }
                if predicate.arity != 1 {
                    out.push(Diagnostic::error(
                        format!("function predicate {predicate} must be unary; multi-argument functions are unsupported"),
                        span,
                    ));
                }
                if fact_preds.contains(predicate) {
                    out.push(Diagnostic::error(
                        format!("{predicate} is declared as a function but also has stored facts"),
                        span,
                    ));
                }
                if head_preds.contains(predicate) {
                    out.push(Diagnostic::error(
                        format!("{predicate} is declared as a function but is also defined by rules"),
                        span,
                    ));
                }
            }
            Directive::Combiner { and, or } => {
                if let Err(e) = Combiners::from_names(and, or) {
                    out.push(Diagnostic::error(e, span));
                }
            }
            _ => {}
        }
    }
    for (i, d) in program.directives.iter().enumerate() {
        if let Directive::Learnable { predicate, .. } = d {
            if functions.contains(predicate) {
                out.push(Diagnostic::error(
                    format!("{predicate} cannot be both learnable and a function"),
                    program.spans.directives.get(i).copied(),
                ));
            }
        }
    }
}

fn check_attributes(program: &Program, out: &mut Vec<Diagnostic>) {
    let attributes = attribute_predicates(program);
    let mut reported = HashSet::new();
    for (i, f) in program.facts.iter().enumerate() {
        let id = f.atom.id();
        if attributes.contains(&id) && !f.is_attribute() && reported.insert(id.clone()) {
            out.push(Diagnostic::error(
                format!("attribute predicate {id} mixes numeric and entity second arguments"),
                program.fact_span(i),
            ));
        }
    }
}

fn check_rule_bodies(program: &Program, out: &mut Vec<Diagnostic>) {
    let attributes = attribute_predicates(program);
    let functions: HashSet<PredicateId> = program
        .directives
        .iter()
        .filter_map(|d| match d {
            Directive::Function { predicate, .. } => Some(predicate.clone()),
            _ => None,
        })
        .collect();
    for (i, rule) in program.rules.iter().enumerate() {
        let span = program.rule_span(i);
        for lit in &rule.body {
            if lit.arity() > 2 {
                out.push(Diagnostic::error(
                    format!(
                        "body literal `{}` has arity {}; body literals are limited to arity two",
                        format_atom(lit),
                        lit.arity()
                    ),
                    span,
                ));
            }
        }
        // Variables bound to attribute values may only feed functions or
        // further attribute value positions.
        let mut value_vars: HashMap<&str, &str> = HashMap::new();
        for lit in &rule.body {
            if attributes.contains(&lit.id()) {
                if let Term::Variable(v) = &lit.terms[1] {
                    value_vars.insert(v, &lit.predicate);
                }
            }
        }
        if value_vars.is_empty() {
            continue;
        }
        let mut misuse = |var: &str, place: String| {
            out.push(Diagnostic::error(
                format!(
                    "variable `{var}` holds a `{}` attribute value but is also used as an entity in {place}",
                    value_vars[var]
                ),
                span,
            ));
        };
        for (pos, t) in rule.head.terms.iter().enumerate() {
            if let Term::Variable(v) = t {
                if value_vars.contains_key(v.as_str()) {
                    misuse(v, format!("the head (argument {})", pos + 1));
                }
            }
        }
        for lit in &rule.body {
            let is_attr = attributes.contains(&lit.id());
            let is_fn = functions.contains(&lit.id());
            for (pos, t) in lit.terms.iter().enumerate() {
                if let Term::Variable(v) = t {
                    if !value_vars.contains_key(v.as_str()) || is_fn || (is_attr && pos == 1) {
                        continue;
                    }
                    misuse(v, format!("`{}`", format_atom(lit)));
                }
            }
        }
    }
}
