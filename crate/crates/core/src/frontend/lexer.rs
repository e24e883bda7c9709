use super::ast::Span;
use super::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// Identifier starting with a lowercase letter.
    Name(String),
    /// Identifier starting with an uppercase letter or underscore.
    Variable(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Period,
    Slash,
    Equals,
    Hash,
    /// `::`
    WeightSep,
    /// `:-` or `←`
    Implies,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Name(n) => format!("`{n}`"),
            Token::Variable(v) => format!("variable `{v}`"),
            Token::Number(x) => format!("number `{x}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Period => "`.`".into(),
            Token::Slash => "`/`".into(),
            Token::Equals => "`=`".into(),
            Token::Hash => "`#`".into(),
            Token::WeightSep => "`::`".into(),
            Token::Implies => "`:-`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek() {
        let span = cur.span();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '%' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let simple = match c {
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            ',' => Some(Token::Comma),
            '.' => Some(Token::Period),
            '/' => Some(Token::Slash),
            '=' => Some(Token::Equals),
            '#' => Some(Token::Hash),
            '←' => Some(Token::Implies),
            _ => None,
        };
        if let Some(token) = simple {
            cur.bump();
            out.push(Spanned { token, span });
            continue;
        }
        if c == ':' {
            cur.bump();
            let token = match cur.peek() {
                Some(':') => Token::WeightSep,
                Some('-') => Token::Implies,
                _ => return Err(ParseError::new(ParseErrorKind::UnexpectedChar(':'), span)),
            };
            cur.bump();
            out.push(Spanned { token, span });
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || ((c == '-' || c == '+') && cur.peek_second().is_some_and(|d| d.is_ascii_digit()));
        if starts_number {
            let start = cur.offset();
            cur.bump();
            while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
            }
            if cur.peek() == Some('.') && cur.peek_second().is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
                while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    cur.bump();
                }
            }
            if matches!(cur.peek(), Some('e' | 'E')) {
                let exp_digit = match cur.peek_second() {
                    Some(d) if d.is_ascii_digit() => true,
                    Some('+' | '-') => {
                        let mut it = cur.chars.clone();
                        it.next();
                        it.next();
                        it.next().is_some_and(|(_, d)| d.is_ascii_digit())
                    }
                    _ => false,
                };
                if exp_digit {
                    cur.bump();
                    if matches!(cur.peek(), Some('+' | '-')) {
                        cur.bump();
                    }
                    while cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                        cur.bump();
                    }
                }
            }
            let end = cur.offset();
            let text = &src[start..end];
            let value: f64 = text
                .parse()
                .map_err(|_| ParseError::new(ParseErrorKind::BadNumber(text.to_string()), span))?;
            if cur.peek().is_some_and(is_ident_char) {
                return Err(ParseError::new(ParseErrorKind::BadNumber(text.to_string()), span));
            }
            out.push(Spanned {
                token: Token::Number(value),
                span,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = cur.offset();
            while cur.peek().is_some_and(is_ident_char) {
                cur.bump();
            }
            let end = cur.offset();
            let text = src[start..end].to_string();
            let token = if c.is_uppercase() || c == '_' {
                Token::Variable(text)
            } else {
                Token::Name(text)
            };
            out.push(Spanned { token, span });
            continue;
        }
        return Err(ParseError::new(ParseErrorKind::UnexpectedChar(c), span));
    }
    Ok(out)
}
