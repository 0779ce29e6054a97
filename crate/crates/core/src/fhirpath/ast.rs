use rust_decimal::Decimal;

use super::functions::Function;
use crate::temporal::PartialDateTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn between(start: Span, end: Span) -> Span {
        Span {
            offset: start.offset,
            len: (end.offset + end.len).saturating_sub(start.offset),
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ast {
    pub kind: NodeKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Union,
    In,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Union => "|",
            BinaryOp::In => "in",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String(String),
    Integer(i64),
    Decimal(Decimal),
    Boolean(bool),
    /// Source text without the `@`, plus its parsed interval.
    DateTime(String, PartialDateTime),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvVariable {
    Now,
    Context,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Leading capitalized identifier: keeps focus items of that resource type.
    /// Also used for the type argument of `ofType`.
    TypeSelector(String),
    /// `base.name`, or `name` on the current focus when `base` is `None`.
    Member { base: Option<Box<Ast>>, name: String },
    Index { base: Box<Ast>, index: Box<Ast> },
    Function { base: Option<Box<Ast>>, function: Function, args: Vec<Ast> },
    Binary { op: BinaryOp, lhs: Box<Ast>, rhs: Box<Ast> },
    Unary { op: UnaryOp, operand: Box<Ast> },
    Literal(Literal),
    EnvVariable(EnvVariable),
    This,
}

impl Ast {
    /// Pre-order walk over this node and its descendants.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Ast)) {
        visit(self);
        match &self.kind {
            NodeKind::Member { base, .. } => {
                if let Some(b) = base {
                    b.walk(visit);
                }
            }
            NodeKind::Index { base, index } => {
                base.walk(visit);
                index.walk(visit);
            }
            NodeKind::Function { base, args, .. } => {
                if let Some(b) = base {
                    b.walk(visit);
                }
                for a in args {
                    a.walk(visit);
                }
            }
            NodeKind::Binary { lhs, rhs, .. } => {
                lhs.walk(visit);
                rhs.walk(visit);
            }
            NodeKind::Unary { operand, .. } => operand.walk(visit),
            NodeKind::TypeSelector(_) | NodeKind::Literal(_) | NodeKind::EnvVariable(_) | NodeKind::This => {}
        }
    }
}
