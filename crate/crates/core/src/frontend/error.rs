use super::ast::Span;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(String),
    #[error("rule head `{0}` is propositional; heads need at least one term")]
    PropositionalHead(String),
    #[error("rules cannot carry a weight")]
    WeightOnRule,
    #[error("fact `{0}` has arity {1}; facts are limited to arity two")]
    FactArity(String, usize),
    #[error("fact `{0}` contains a variable")]
    NonGroundFact(String),
    #[error("numeric term in `{0}`; numbers may only be the second argument of a binary fact")]
    MisplacedNumber(String),
    #[error("weight must be finite")]
    NonFiniteWeight,
    #[error("unknown directive `#{0}`")]
    UnknownDirective(String),
    #[error("malformed directive: {0}")]
    BadDirective(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: Span) -> Self {
        ParseError { kind, span }
    }
}
