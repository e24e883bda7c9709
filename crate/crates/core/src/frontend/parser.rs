//! Recursive-descent parser for the program grammar:
//!
//! ```text
//! program   := clause*
//! clause    := directive | [number "::"] atom [":-" atom ("," atom)*] "."
//! directive := "#" name "(" ... ")" "."
//! atom      := name ["(" [term ("," term)*] ")"]
//! term      := name | variable | number
//! ```

use std::collections::HashSet;

use super::ast::{Atom, Directive, Fact, LearnableInit, PredicateId, Program, Rule, Span, Term};
use super::emit::format_atom;
use super::error::{ParseError, ParseErrorKind};
use super::lexer::{tokenize, Spanned, Token};

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser::new(tokens);
    let mut program = Program::default();
    while !parser.at_end() {
        parser.clause(&mut program)?;
    }
    Ok(program)
}

/// Parses a single atom, with or without a trailing period. Variables are
/// allowed; `_` is kept as-is.
pub fn parse_atom(src: &str) -> Result<Atom, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser::new(tokens);
    let (atom, _) = parser.atom()?;
    if parser.peek_is(&Token::Period) {
        parser.next()?;
    }
    if let Some(tok) = parser.tokens.get(parser.pos) {
        return Err(ParseError::new(
            ParseErrorKind::Unexpected {
                expected: "end of input".into(),
                found: tok.token.describe(),
            },
            tok.span,
        ));
    }
    Ok(atom)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(tokens: Vec<Spanned>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn eof_span(&self) -> Span {
        self.tokens.last().map(|t| t.span).unwrap_or(Span { line: 1, column: 1 })
    }

    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn peek_is(&self, token: &Token) -> bool {
        self.peek().is_some_and(|t| &t.token == token)
    }

    fn next(&mut self) -> Result<Spanned, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(ParseError::new(
                ParseErrorKind::UnexpectedEof("more input".into()),
                self.eof_span(),
            )),
        }
    }

    fn expect(&mut self, token: Token) -> Result<Span, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) if t.token == token => {
                self.pos += 1;
                Ok(t.span)
            }
            Some(t) => Err(ParseError::new(
                ParseErrorKind::Unexpected {
                    expected: token.describe(),
                    found: t.token.describe(),
                },
                t.span,
            )),
            None => Err(ParseError::new(
                ParseErrorKind::UnexpectedEof(token.describe()),
                self.eof_span(),
            )),
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let tok = self.next()?;
        match tok.token {
            Token::Name(n) => Ok((n, tok.span)),
            other => Err(ParseError::new(
                ParseErrorKind::Unexpected {
                    expected: what.into(),
                    found: other.describe(),
                },
                tok.span,
            )),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let tok = self.next()?;
        match tok.token {
            Token::Name(n) => Ok(Term::Constant(n)),
            Token::Variable(v) => Ok(Term::Variable(v)),
            Token::Number(x) => Ok(Term::Number(x)),
            other => Err(ParseError::new(
                ParseErrorKind::Unexpected {
                    expected: "a term".into(),
                    found: other.describe(),
                },
                tok.span,
            )),
        }
    }

    fn atom(&mut self) -> Result<(Atom, Span), ParseError> {
        let (predicate, span) = self.name("a predicate name")?;
        let mut terms = Vec::new();
        if self.peek_is(&Token::LParen) {
            self.next()?;
            if !self.peek_is(&Token::RParen) {
                loop {
                    terms.push(self.term()?);
                    if self.peek_is(&Token::Comma) {
                        self.next()?;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Token::RParen)?;
        }
        Ok((Atom { predicate, terms }, span))
    }

    fn clause(&mut self, program: &mut Program) -> Result<(), ParseError> {
        let start = self.peek().map(|t| t.span).unwrap_or_default();
        if self.peek_is(&Token::Hash) {
            self.next()?;
            let directive = self.directive()?;
            self.expect(Token::Period)?;
            program.directives.push(directive);
            program.spans.directives.push(start);
            return Ok(());
        }

        let mut weight = None;
        if let Some(Spanned {
            token: Token::Number(w),
            span,
        }) = self.peek().cloned()
        {
            self.next()?;
            self.expect(Token::WeightSep)?;
            if !w.is_finite() {
                return Err(ParseError::new(ParseErrorKind::NonFiniteWeight, span));
            }
            weight = Some(w);
        }

        let (head, head_span) = self.atom()?;
        if self.peek_is(&Token::Implies) {
            self.next()?;
            if weight.is_some() {
                return Err(ParseError::new(ParseErrorKind::WeightOnRule, start));
            }
            if head.terms.is_empty() {
                return Err(ParseError::new(
                    ParseErrorKind::PropositionalHead(head.predicate.clone()),
                    head_span,
                ));
            }
            let mut body = Vec::new();
            loop {
                let (lit, lit_span) = self.atom()?;
                if lit.terms.iter().any(Term::is_number) {
                    return Err(ParseError::new(
                        ParseErrorKind::MisplacedNumber(format_atom(&lit)),
                        lit_span,
                    ));
                }
                body.push(lit);
                if self.peek_is(&Token::Comma) {
                    self.next()?;
                } else {
                    break;
                }
            }
            self.expect(Token::Period)?;
            if head.terms.iter().any(Term::is_number) {
                return Err(ParseError::new(
                    ParseErrorKind::MisplacedNumber(format_atom(&head)),
                    head_span,
                ));
            }
            let mut rule = Rule { head, body };
            name_anonymous_variables(&mut rule);
            program.rules.push(rule);
            program.spans.rules.push(start);
            return Ok(());
        }

        self.expect(Token::Period)?;
        check_fact(&head, head_span)?;
        program.facts.push(Fact::new(head, weight.unwrap_or(1.0)));
        program.spans.facts.push(start);
        Ok(())
    }

    fn directive(&mut self) -> Result<Directive, ParseError> {
        let (name, span) = self.name("a directive name")?;
        self.expect(Token::LParen)?;
        let directive = match name.as_str() {
            "learnable" => {
                let predicate = self.predicate_id()?;
                let mut init = LearnableInit::Declared;
                if self.peek_is(&Token::Comma) {
                    self.next()?;
                    let (mode, mode_span) = self.name("`dense`")?;
                    if mode != "dense" {
                        return Err(ParseError::new(
                            ParseErrorKind::BadDirective(format!("unknown learnable mode `{mode}`")),
                            mode_span,
                        ));
                    }
                    init = LearnableInit::Dense;
                }
                Directive::Learnable { predicate, init }
            }
            "function" => {
                let predicate = self.predicate_id()?;
                self.expect(Token::Comma)?;
                let (builtin, _) = self.name("a builtin name")?;
                Directive::Function { predicate, builtin }
            }
            "recursion_depth" => {
                let tok = self.next()?;
                match tok.token {
                    Token::Number(k) if k >= 0.0 && k.fract() == 0.0 => {
                        Directive::RecursionDepth(k as usize)
                    }
                    _ => {
                        return Err(ParseError::new(
                            ParseErrorKind::BadDirective(
                                "recursion depth must be a non-negative integer".into(),
                            ),
                            tok.span,
                        ))
                    }
                }
            }
            "combiner" => {
                let mut and = "product".to_string();
                let mut or = "sum".to_string();
                loop {
                    let (key, key_span) = self.name("`and` or `or`")?;
                    self.expect(Token::Equals)?;
                    let (value, _) = self.name("a combiner name")?;
                    match key.as_str() {
                        "and" => and = value,
                        "or" => or = value,
                        _ => {
                            return Err(ParseError::new(
                                ParseErrorKind::BadDirective(format!("unknown combiner key `{key}`")),
                                key_span,
                            ))
                        }
                    }
                    if self.peek_is(&Token::Comma) {
                        self.next()?;
                    } else {
                        break;
                    }
                }
                Directive::Combiner { and, or }
            }
            _ => return Err(ParseError::new(ParseErrorKind::UnknownDirective(name), span)),
        };
        self.expect(Token::RParen)?;
        Ok(directive)
    }

    fn predicate_id(&mut self) -> Result<PredicateId, ParseError> {
        let (name, _) = self.name("a predicate name")?;
        self.expect(Token::Slash)?;
        let tok = self.next()?;
        match tok.token {
            Token::Number(k) if k >= 0.0 && k.fract() == 0.0 => Ok(PredicateId::new(name, k as usize)),
            other => Err(ParseError::new(
                ParseErrorKind::Unexpected {
                    expected: "an arity".into(),
                    found: other.describe(),
                },
                tok.span,
            )),
        }
    }
}

fn check_fact(atom: &Atom, span: Span) -> Result<(), ParseError> {
    if atom.terms.iter().any(Term::is_variable) {
        return Err(ParseError::new(ParseErrorKind::NonGroundFact(format_atom(atom)), span));
    }
    if atom.arity() > 2 {
        return Err(ParseError::new(
            ParseErrorKind::FactArity(format_atom(atom), atom.arity()),
            span,
        ));
    }
    let misplaced = atom
        .terms
        .iter()
        .enumerate()
        .any(|(i, t)| t.is_number() && !(i == 1 && atom.arity() == 2));
    if misplaced {
        return Err(ParseError::new(ParseErrorKind::MisplacedNumber(format_atom(atom)), span));
    }
    Ok(())
}

/// Gives every `_` occurrence in a rule its own fresh variable name.
fn name_anonymous_variables(rule: &mut Rule) {
    let used: HashSet<String> = std::iter::once(&rule.head)
        .chain(rule.body.iter())
        .flat_map(|a| a.variables().map(str::to_string).collect::<Vec<_>>())
        .collect();
    let mut counter = 0usize;
    let mut fresh = || loop {
        counter += 1;
        let name = format!("_G{counter}");
        if !used.contains(&name) {
            return name;
        }
    };
    for atom in std::iter::once(&mut rule.head).chain(rule.body.iter_mut()) {
        for term in &mut atom.terms {
            if matches!(term, Term::Variable(v) if v == "_") {
                *term = Term::Variable(fresh());
            }
        }
    }
}
