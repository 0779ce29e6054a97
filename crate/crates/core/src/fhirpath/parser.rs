//! Recursive-descent parser.
//!
//! Binding strength, loosest first:
//!
//! | level | operators            |
//! |-------|----------------------|
//! | 1     | `or`                 |
//! | 2     | `and`                |
//! | 3     | `in`                 |
//! | 4     | `=` `!=`             |
//! | 5     | `<` `<=` `>` `>=`    |
//! | 6     | `\|`                 |
//! | 7     | `+` `-`              |
//! | 8     | `*` `/`              |
//! | 9     | unary `+` `-`        |
//! | 10    | `.member` `.fn()` `[i]` |
//!
//! All binary operators are left-associative.

use std::str::FromStr;

use rust_decimal::Decimal;

use super::ast::{Ast, BinaryOp, EnvVariable, Literal, NodeKind, Span, UnaryOp};
use super::error::EngineError;
use super::functions::Function;
use super::lexer::{tokenize, unescape, Token, TokenKind};
use crate::temporal::PartialDateTime;

const LEVELS: &[&[(&str, BinaryOp)]] = &[
    &[("or", BinaryOp::Or)],
    &[("and", BinaryOp::And)],
    &[("in", BinaryOp::In)],
    &[("=", BinaryOp::Eq), ("!=", BinaryOp::NotEq)],
    &[("<", BinaryOp::Lt), ("<=", BinaryOp::LtEq), (">", BinaryOp::Gt), (">=", BinaryOp::GtEq)],
    &[("|", BinaryOp::Union)],
    &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
    &[("*", BinaryOp::Mul), ("/", BinaryOp::Div)],
];

pub fn parse(input: &str) -> Result<Ast, EngineError> {
    let tokens = tokenize(input)?;
    let mut parser = Parser {
        input,
        tokens,
        pos: 0,
    };
    if parser.tokens.is_empty() {
        return Err(EngineError::parse(input, 0, "an expression"));
    }
    let ast = parser.expression()?;
    if let Some(t) = parser.peek() {
        return Err(EngineError::parse(input, t.offset, "end of expression"));
    }
    Ok(ast)
}

struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

fn span_of(t: &Token) -> Span {
    Span {
        offset: t.offset,
        len: t.text.len(),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_symbol(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(s))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> EngineError {
        let offset = self.peek().map(|t| t.offset).unwrap_or(self.input.len());
        EngineError::parse(self.input, offset, expected)
    }

    fn expect_symbol(&mut self, s: &str) -> Result<Token, EngineError> {
        if self.peek_symbol(s) {
            Ok(self.next().expect("peeked"))
        } else {
            Err(self.error_here(&format!("'{s}'")))
        }
    }

    fn expression(&mut self) -> Result<Ast, EngineError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Ast, EngineError> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = self
                .peek()
                .filter(|t| t.kind == TokenKind::Symbol)
                .and_then(|t| LEVELS[level].iter().find(|(s, _)| *s == t.text))
                .map(|(_, op)| *op);
            let Some(op) = op else { break };
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            let span = Span::between(lhs.span, rhs.span);
            lhs = Ast {
                kind: NodeKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ast, EngineError> {
        let op = if self.peek_symbol("-") {
            Some(UnaryOp::Minus)
        } else if self.peek_symbol("+") {
            Some(UnaryOp::Plus)
        } else {
            None
        };
        match op {
            Some(op) => {
                let t = self.next().expect("peeked");
                let operand = self.unary()?;
                let span = Span::between(span_of(&t), operand.span);
                Ok(Ast {
                    kind: NodeKind::Unary {
                        op,
                        operand: Box::new(operand),
                    },
                    span,
                })
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Ast, EngineError> {
        let mut node = self.term()?;
        loop {
            if self.peek_symbol(".") {
                self.pos += 1;
                let name = match self.peek() {
                    Some(t) if t.kind == TokenKind::Identifier && t.text != "$this" => self.next().expect("peeked"),
                    _ => return Err(self.error_here("identifier after '.'")),
                };
                node = if self.peek_symbol("(") {
                    self.call(Some(node), name)?
                } else {
                    let span = Span::between(node.span, span_of(&name));
                    Ast {
                        kind: NodeKind::Member {
                            base: Some(Box::new(node)),
                            name: identifier_name(&name.text),
                        },
                        span,
                    }
                };
            } else if self.peek_symbol("[") {
                self.pos += 1;
                let index = self.expression()?;
                let close = self.expect_symbol("]")?;
                let span = Span::between(node.span, span_of(&close));
                node = Ast {
                    kind: NodeKind::Index {
                        base: Box::new(node),
                        index: Box::new(index),
                    },
                    span,
                };
            } else {
                return Ok(node);
            }
        }
    }

    fn call(&mut self, base: Option<Ast>, name: Token) -> Result<Ast, EngineError> {
        let function = Function::lookup(&name.text).ok_or_else(|| EngineError::UnknownFunction {
            name: name.text.clone(),
            offset: name.offset,
        })?;
        self.expect_symbol("(")?;
        let mut args = Vec::new();
        if !self.peek_symbol(")") {
            loop {
                let arg = if function == Function::OfType {
                    self.type_specifier()?
                } else {
                    self.expression()?
                };
                args.push(arg);
                if self.peek_symbol(",") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        let close = self.expect_symbol(")")?;
        let (min, max) = function.arity();
        if args.len() < min || args.len() > max {
            let expected = if min == max {
                min.to_string()
            } else {
                format!("{min} to {max}")
            };
            return Err(EngineError::Arity {
                name: function.name().to_string(),
                expected,
                found: args.len(),
            });
        }
        let start = base.as_ref().map(|b| b.span).unwrap_or_else(|| span_of(&name));
        Ok(Ast {
            kind: NodeKind::Function {
                base: base.map(Box::new),
                function,
                args,
            },
            span: Span::between(start, span_of(&close)),
        })
    }

    /// `Quantity`, `FHIR.Quantity` or `System.String`; the namespace is dropped.
    fn type_specifier(&mut self) -> Result<Ast, EngineError> {
        let first = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && t.text != "$this" => self.next().expect("peeked"),
            _ => return Err(self.error_here("type name")),
        };
        let mut last = first.clone();
        if self.peek_symbol(".") {
            self.pos += 1;
            last = match self.peek() {
                Some(t) if t.kind == TokenKind::Identifier => self.next().expect("peeked"),
                _ => return Err(self.error_here("type name after namespace")),
            };
        }
        Ok(Ast {
            kind: NodeKind::TypeSelector(identifier_name(&last.text)),
            span: Span::between(span_of(&first), span_of(&last)),
        })
    }

    fn term(&mut self) -> Result<Ast, EngineError> {
        let Some(t) = self.next() else {
            return Err(self.error_here("an expression"));
        };
        let span = span_of(&t);
        let literal = |l: Literal| Ok(Ast { kind: NodeKind::Literal(l), span });
        match t.kind {
            TokenKind::StringLiteral => {
                let s = unescape(&t.text).ok_or_else(|| EngineError::parse(self.input, t.offset, "valid escape"))?;
                literal(Literal::String(s))
            }
            TokenKind::NumberLiteral => {
                if t.text.contains('.') {
                    let d = Decimal::from_str(&t.text)
                        .map_err(|_| EngineError::parse(self.input, t.offset, "decimal literal"))?;
                    literal(Literal::Decimal(d))
                } else {
                    match t.text.parse::<i64>() {
                        Ok(i) => literal(Literal::Integer(i)),
                        Err(_) => Err(EngineError::parse(self.input, t.offset, "integer literal in range")),
                    }
                }
            }
            TokenKind::BooleanLiteral => literal(Literal::Boolean(t.text == "true")),
            TokenKind::DateLiteral => {
                let body = t.text[1..].trim_end_matches('T').to_string();
                let parsed = PartialDateTime::parse(&body).expect("lexer validated date literal");
                literal(Literal::DateTime(body, parsed))
            }
            TokenKind::EnvVariable => {
                let var = match t.text.as_str() {
                    "%now" => EnvVariable::Now,
                    "%context" => EnvVariable::Context,
                    _ => return Err(EngineError::parse(self.input, t.offset, "%now or %context")),
                };
                Ok(Ast {
                    kind: NodeKind::EnvVariable(var),
                    span,
                })
            }
            TokenKind::Identifier if t.text == "$this" => Ok(Ast {
                kind: NodeKind::This,
                span,
            }),
            TokenKind::Identifier => {
                if self.peek_symbol("(") {
                    return self.call(None, t);
                }
                let backticked = t.text.starts_with('`');
                let name = identifier_name(&t.text);
                let kind = if !backticked && name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    NodeKind::TypeSelector(name)
                } else {
                    NodeKind::Member { base: None, name }
                };
                Ok(Ast { kind, span })
            }
            TokenKind::Symbol if t.text == "(" => {
                let inner = self.expression()?;
                let close = self.expect_symbol(")")?;
                Ok(Ast {
                    kind: inner.kind,
                    span: Span::between(span, span_of(&close)),
                })
            }
            TokenKind::Symbol => Err(EngineError::parse(self.input, t.offset, "an expression")),
        }
    }
}

fn identifier_name(text: &str) -> String {
    text.trim_matches('`').to_string()
}
