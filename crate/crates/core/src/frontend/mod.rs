//! Lexing, parsing, validation and pretty-printing of logic programs.

mod ast;
mod emit;
mod error;
mod lexer;
mod parser;
mod validate;

pub use ast::{
    Atom, Directive, Fact, LearnableInit, PredicateId, Program, Rule, SourceMap, Span, Term,
    DEFAULT_RECURSION_DEPTH,
};
pub use emit::{emit_program, format_atom, format_directive, format_fact, format_number, format_rule, format_term};
pub use error::{ParseError, ParseErrorKind};
pub use parser::{parse_atom, parse_program};
pub use validate::{attribute_predicates, validate_program, Diagnostic, Severity};
