use std::fmt;

use thiserror::Error;

use super::QueryGraph;
use crate::kg::{EntityId, RelationId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    Expected(&'static str),
    UnknownOperator(String),
    InvalidInteger(String),
    Arity { operator: &'static str, found: usize },
    TrailingInput,
    NonAscii,
}

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at position {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::Expected(what) => write!(f, "expected {what}"),
            ParseErrorKind::UnknownOperator(op) => write!(f, "unknown operator {op:?}"),
            ParseErrorKind::InvalidInteger(tok) => write!(f, "expected a non-negative integer id, found {tok:?}"),
            ParseErrorKind::Arity { operator, found } => {
                write!(f, "`{operator}` needs at least 2 operands, found {found}")
            }
            ParseErrorKind::TrailingInput => f.write_str("unexpected input after query"),
            ParseErrorKind::NonAscii => f.write_str("non-ASCII character"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token with its starting offset.
    fn next(&mut self) -> Option<(usize, Token<'a>)> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        match bytes.get(start)? {
            b'(' => {
                self.pos += 1;
                Some((start, Token::Open))
            }
            b')' => {
                self.pos += 1;
                Some((start, Token::Close))
            }
            _ => {
                let end = bytes[start..]
                    .iter()
                    .position(|&b| b == b'(' || b == b')' || b.is_ascii_whitespace())
                    .map_or(bytes.len(), |i| start + i);
                self.pos = end;
                Some((start, Token::Atom(&self.src[start..end])))
            }
        }
    }

    fn peek(&mut self) -> Option<(usize, Token<'a>)> {
        let saved = self.pos;
        let tok = self.next();
        self.pos = saved;
        tok
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
}

impl<'a> Parser<'a> {
    fn err(&self, position: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { position, kind }
    }

    fn expect(&mut self, want: Token<'static>, what: &'static str) -> Result<(), ParseError> {
        match self.lexer.next() {
            Some((_, tok)) if tok == want => Ok(()),
            Some((pos, _)) => Err(self.err(pos, ParseErrorKind::Expected(what))),
            None => Err(self.err(self.lexer.pos, ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        match self.lexer.next() {
            Some((pos, Token::Atom(a))) => {
                if !a.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(self.err(pos, ParseErrorKind::InvalidInteger(a.to_string())));
                }
                a.parse().map_err(|_| self.err(pos, ParseErrorKind::InvalidInteger(a.to_string())))
            }
            Some((pos, _)) => Err(self.err(pos, ParseErrorKind::Expected("an integer id"))),
            None => Err(self.err(self.lexer.pos, ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn query(&mut self) -> Result<QueryGraph, ParseError> {
        self.expect(Token::Open, "`(`")?;
        let (op_pos, op) = match self.lexer.next() {
            Some((pos, Token::Atom(op))) => (pos, op),
            Some((pos, _)) => return Err(self.err(pos, ParseErrorKind::Expected("an operator"))),
            None => return Err(self.err(self.lexer.pos, ParseErrorKind::UnexpectedEnd)),
        };
        let q = match op {
            "e" => QueryGraph::Anchor(EntityId(self.integer()?)),
            "p" => {
                let r = self.integer()?;
                QueryGraph::Projection(RelationId(r), Box::new(self.query()?))
            }
            "not" => QueryGraph::Negation(Box::new(self.query()?)),
            "and" | "or" => {
                let mut children = Vec::new();
                while let Some((_, Token::Open)) = self.lexer.peek() {
                    children.push(self.query()?);
                }
                let operator = if op == "and" { "and" } else { "or" };
                if children.len() < 2 {
                    return Err(self.err(op_pos, ParseErrorKind::Arity { operator, found: children.len() }));
                }
                if op == "and" {
                    QueryGraph::Intersection(children)
                } else {
                    QueryGraph::Union(children)
                }
            }
            other => return Err(self.err(op_pos, ParseErrorKind::UnknownOperator(other.to_string()))),
        };
        self.expect(Token::Close, "`)`")?;
        Ok(q)
    }
}

/// Parses the s-expression query language.
pub fn parse_query(text: &str) -> Result<QueryGraph, ParseError> {
    if let Some(i) = text.bytes().position(|b| !b.is_ascii()) {
        return Err(ParseError { position: i, kind: ParseErrorKind::NonAscii });
    }
    let mut parser = Parser { lexer: Lexer { src: text, pos: 0 } };
    let q = parser.query()?;
    if let Some((pos, _)) = parser.lexer.next() {
        return Err(parser.err(pos, ParseErrorKind::TrailingInput));
    }
    Ok(q)
}
