//! The closed registry of supported functions.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Where,
    Select,
    Exists,
    Empty,
    Count,
    First,
    Last,
    Tail,
    Distinct,
    Not,
    Iif,
    OfType,
    Resolve,
    ToInteger,
    ToDecimal,
    Lower,
    Upper,
    Contains,
    StartsWith,
    EndsWith,
    // non-standard ordering extensions
    OrderBy,
    MinBy,
    MaxBy,
}

/// (name, function, min args, max args)
const REGISTRY: &[(&str, Function, usize, usize)] = &[
    ("where", Function::Where, 1, 1),
    ("select", Function::Select, 1, 1),
    ("exists", Function::Exists, 0, 1),
    ("empty", Function::Empty, 0, 0),
    ("count", Function::Count, 0, 0),
    ("first", Function::First, 0, 0),
    ("last", Function::Last, 0, 0),
    ("tail", Function::Tail, 0, 0),
    ("distinct", Function::Distinct, 0, 0),
    ("not", Function::Not, 0, 0),
    ("iif", Function::Iif, 2, 3),
    ("ofType", Function::OfType, 1, 1),
    ("resolve", Function::Resolve, 0, 0),
    ("toInteger", Function::ToInteger, 0, 0),
    ("toDecimal", Function::ToDecimal, 0, 0),
    ("lower", Function::Lower, 0, 0),
    ("upper", Function::Upper, 0, 0),
    ("contains", Function::Contains, 1, 1),
    ("startsWith", Function::StartsWith, 1, 1),
    ("endsWith", Function::EndsWith, 1, 1),
    ("orderBy", Function::OrderBy, 1, 1),
    ("minBy", Function::MinBy, 1, 1),
    ("maxBy", Function::MaxBy, 1, 1),
];

impl Function {
    pub fn lookup(name: &str) -> Option<Function> {
        REGISTRY.iter().find(|(n, ..)| *n == name).map(|(_, f, ..)| *f)
    }

    fn entry(self) -> &'static (&'static str, Function, usize, usize) {
        REGISTRY.iter().find(|(_, f, ..)| *f == self).expect("every function is registered")
    }

    pub fn name(self) -> &'static str {
        self.entry().0
    }

    pub fn arity(self) -> (usize, usize) {
        let (_, _, min, max) = *self.entry();
        (min, max)
    }

    pub fn all() -> impl Iterator<Item = Function> {
        REGISTRY.iter().map(|(_, f, ..)| *f)
    }
}
