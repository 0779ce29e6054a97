use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("parse error at offset {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unknown element `{path}`")]
    UnknownElement { path: String },
    #[error("type mismatch: `{operator}` cannot apply to {operands}")]
    TypeMismatch { operator: String, operands: String },
    #[error("{name}() takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("unsupported reference `{0}`: only relative Type/id references resolve")]
    UnsupportedReference(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum EngineErrorKind {
    ParseError,
    UnknownFunction,
    UnknownElement,
    TypeMismatch,
    ArityError,
    UnsupportedReference,
}

impl EngineError {
    pub fn kind(&self) -> EngineErrorKind {
        match self {
            EngineError::Parse { .. } => EngineErrorKind::ParseError,
            EngineError::UnknownFunction { .. } => EngineErrorKind::UnknownFunction,
            EngineError::UnknownElement { .. } => EngineErrorKind::UnknownElement,
            EngineError::TypeMismatch { .. } => EngineErrorKind::TypeMismatch,
            EngineError::Arity { .. } => EngineErrorKind::ArityError,
            EngineError::UnsupportedReference(_) => EngineErrorKind::UnsupportedReference,
        }
    }

    /// True for errors raised before evaluation starts.
    pub fn is_syntax(&self) -> bool {
        matches!(
            self.kind(),
            EngineErrorKind::ParseError | EngineErrorKind::UnknownFunction | EngineErrorKind::ArityError
        )
    }

    pub(crate) fn parse(input: &str, offset: usize, expected: impl Into<String>) -> Self {
        EngineError::Parse {
            offset: offset.min(input.len().saturating_sub(1)),
            expected: expected.into(),
        }
    }

    pub(crate) fn mismatch(operator: impl Into<String>, operands: impl fmt::Display) -> Self {
        EngineError::TypeMismatch {
            operator: operator.into(),
            operands: operands.to_string(),
        }
    }
}

impl fmt::Display for EngineErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
