//! Pretty-printing programs back to source text.

use std::fmt::Write;

use super::ast::{Atom, Directive, Fact, LearnableInit, Program, Rule, Term};

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e16 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

pub fn format_term(term: &Term) -> String {
    match term {
        Term::Constant(c) => c.clone(),
        Term::Variable(v) => v.clone(),
        Term::Number(x) => format_number(*x),
    }
}

pub fn format_atom(atom: &Atom) -> String {
    if atom.terms.is_empty() {
        return atom.predicate.clone();
    }
    let args: Vec<String> = atom.terms.iter().map(format_term).collect();
    format!("{}({})", atom.predicate, args.join(", "))
}

pub fn format_fact(fact: &Fact) -> String {
    if fact.weight == 1.0 {
        format!("{}.", format_atom(&fact.atom))
    } else {
        format!("{}::{}.", format_number(fact.weight), format_atom(&fact.atom))
    }
}

pub fn format_rule(rule: &Rule) -> String {
    let body: Vec<String> = rule.body.iter().map(format_atom).collect();
    format!("{} :- {}.", format_atom(&rule.head), body.join(", "))
}

pub fn format_directive(directive: &Directive) -> String {
    match directive {
        Directive::Learnable { predicate, init } => match init {
            LearnableInit::Declared => format!("#learnable({predicate})."),
            LearnableInit::Dense => format!("#learnable({predicate}, dense)."),
        },
        Directive::Function { predicate, builtin } => format!("#function({predicate}, {builtin})."),
        Directive::RecursionDepth(k) => format!("#recursion_depth({k})."),
        Directive::Combiner { and, or } => format!("#combiner(and={and}, or={or})."),
    }
}

/// Directives first, then facts, then rules, one clause per line.
pub fn emit_program(program: &Program) -> String {
    let mut out = String::new();
    for d in &program.directives {
        let _ = writeln!(out, "{}", format_directive(d));
    }
    for f in &program.facts {
        let _ = writeln!(out, "{}", format_fact(f));
    }
    for r in &program.rules {
        let _ = writeln!(out, "{}", format_rule(r));
    }
    out
}
