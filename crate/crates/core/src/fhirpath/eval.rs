//! Tree-walking evaluator.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rust_decimal::Decimal;

use super::ast::{Ast, BinaryOp, EnvVariable, Literal, NodeKind, UnaryOp};
use super::collection::{Collection, Item, Origin};
use super::elements::ElementDictionary;
use super::error::EngineError;
use super::functions::Function;
use crate::store::{PatientBundle, StoreError};
use crate::temporal::{format_instant, PartialDateTime};
use crate::value::FhirValue;

type Items<'a> = Vec<Item<'a>>;
type Result<T> = std::result::Result<T, EngineError>;

/// Inputs fixed for one evaluation.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    bundle: &'a PatientBundle,
    now: Option<DateTime<Utc>>,
    strict: bool,
}

impl<'a> EvalContext<'a> {
    /// `%now` defaults to the bundle's record clock.
    pub fn new(bundle: &'a PatientBundle) -> Self {
        EvalContext {
            bundle,
            now: bundle.clock(),
            strict: false,
        }
    }

    pub fn with_now(mut self, now: DateTime<Utc>) -> Self {
        self.now = Some(now);
        self
    }

    /// Member names absent from the bundled element dictionary become
    /// `UnknownElement` errors instead of empty results.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn bundle(&self) -> &'a PatientBundle {
        self.bundle
    }

    pub fn now(&self) -> Option<DateTime<Utc>> {
        self.now
    }
}

pub fn evaluate<'a>(ast: &Ast, ctx: &EvalContext<'a>) -> Result<Collection<'a>> {
    let root: Items<'a> = ctx
        .bundle
        .resources()
        .iter()
        .map(|r| Item {
            value: Cow::Borrowed(r.root()),
            origin: Origin::Element {
                resource: Arc::from(r.key()),
                path: r.resource_type().to_string(),
            },
            type_name: None,
        })
        .collect();
    let ev = Evaluator { ctx, root };
    let items = ev.eval(ast, &ev.root, None)?;
    Ok(Collection { items })
}

struct Evaluator<'c, 'a> {
    ctx: &'c EvalContext<'a>,
    root: Items<'a>,
}

#[derive(Debug, Clone, Copy)]
enum Num {
    Int(i64),
    Dec(Decimal),
}

impl Num {
    fn of(v: &FhirValue) -> Option<Num> {
        match v {
            FhirValue::Integer(i) => Some(Num::Int(*i)),
            FhirValue::Decimal(d) => Some(Num::Dec(*d)),
            _ => None,
        }
    }

    fn dec(self) -> Decimal {
        match self {
            Num::Int(i) => Decimal::from(i),
            Num::Dec(d) => d,
        }
    }

    fn cmp(self, other: Num) -> Ordering {
        match (self, other) {
            (Num::Int(a), Num::Int(b)) => a.cmp(&b),
            (a, b) => a.dec().cmp(&b.dec()),
        }
    }
}

fn describe(items: &[&Item<'_>]) -> String {
    items
        .iter()
        .map(|i| i.type_name.clone().unwrap_or_else(|| i.value.kind().to_string()))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn singleton<'x, 'a>(items: &'x [Item<'a>], operator: &str) -> Result<Option<&'x Item<'a>>> {
    match items {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        many => Err(EngineError::mismatch(
            operator,
            format!("a collection of {} items where one was expected", many.len()),
        )),
    }
}

/// Singleton evaluation of collections as booleans.
fn to_boolean(items: &[Item<'_>], operator: &str) -> Result<Option<bool>> {
    Ok(singleton(items, operator)?.map(|i| match i.value.as_ref() {
        FhirValue::Boolean(b) => *b,
        _ => true,
    }))
}

fn boolean<'a>(b: bool) -> Items<'a> {
    vec![Item::synthetic(FhirValue::Boolean(b))]
}

fn temporal_of(item: &Item<'_>) -> Option<PartialDateTime> {
    item.value.as_str().and_then(PartialDateTime::parse)
}

/// `Some(true|false)`, or `None` when precision makes the answer unknown.
fn items_equal(a: &Item<'_>, b: &Item<'_>) -> Option<bool> {
    if let (Some(x), Some(y)) = (Num::of(&a.value), Num::of(&b.value)) {
        return Some(x.cmp(y) == Ordering::Equal);
    }
    match (a.value.as_ref(), b.value.as_ref()) {
        (FhirValue::String(x), FhirValue::String(y)) => {
            if a.is_temporal_literal() || b.is_temporal_literal() {
                match (temporal_of(a), temporal_of(b)) {
                    (Some(x), Some(y)) => x.compare(&y).map(|o| o == Ordering::Equal),
                    _ => Some(false),
                }
            } else {
                Some(x == y)
            }
        }
        (x, y) => Some(x == y),
    }
}

fn compare_items(a: &Item<'_>, b: &Item<'_>, op: BinaryOp) -> Result<Option<Ordering>> {
    if let (Some(x), Some(y)) = (Num::of(&a.value), Num::of(&b.value)) {
        return Ok(Some(x.cmp(y)));
    }
    let mismatch = || EngineError::mismatch(op.symbol(), describe(&[a, b]));
    match (a.value.as_ref(), b.value.as_ref()) {
        (FhirValue::String(x), FhirValue::String(y)) => {
            let hinted = a.is_temporal_literal() || b.is_temporal_literal();
            match (temporal_of(a), temporal_of(b)) {
                (Some(tx), Some(ty)) => Ok(tx.compare(&ty)),
                _ if hinted => Err(mismatch()),
                _ => Ok(Some(x.cmp(y))),
            }
        }
        _ => Err(mismatch()),
    }
}

/// Keeps the first occurrence of each structurally distinct value.
fn dedup(items: Items<'_>) -> Items<'_> {
    let keep: Vec<bool> = {
        let mut seen: HashSet<&FhirValue> = HashSet::new();
        items.iter().map(|i| seen.insert(i.value.as_ref())).collect()
    };
    items.into_iter().zip(keep).filter_map(|(i, k)| k.then_some(i)).collect()
}

fn type_matches(item: &Item<'_>, type_name: &str) -> bool {
    if let Some(t) = &item.type_name {
        return t.eq_ignore_ascii_case(type_name);
    }
    match item.value.as_ref() {
        FhirValue::Object(map) => map.get("resourceType").and_then(FhirValue::as_str) == Some(type_name),
        FhirValue::String(_) => type_name.eq_ignore_ascii_case("string"),
        FhirValue::Integer(_) => type_name.eq_ignore_ascii_case("integer"),
        FhirValue::Decimal(_) => type_name.eq_ignore_ascii_case("decimal"),
        FhirValue::Boolean(_) => type_name.eq_ignore_ascii_case("boolean"),
        _ => false,
    }
}

/// Children of `map` reached by member `name`, with path suffix and choice type.
fn member_children<'v>(map: &'v BTreeMap<String, FhirValue>, name: &str) -> Vec<(&'v FhirValue, String, Option<String>)> {
    let mut out = Vec::new();
    let mut push = |v: &'v FhirValue, field: &str, ty: Option<String>| match v {
        FhirValue::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                if !matches!(x, FhirValue::Null) {
                    out.push((x, format!("{field}[{i}]"), ty.clone()));
                }
            }
        }
        FhirValue::Null => {}
        other => out.push((other, field.to_string(), ty)),
    };
    if let Some(v) = map.get(name) {
        push(v, name, None);
    } else {
        // choice element: `value` reaches `valueQuantity`
        for (field, v) in map.range(name.to_string()..) {
            let Some(suffix) = field.strip_prefix(name) else { break };
            if suffix.starts_with(|c: char| c.is_ascii_uppercase()) {
                push(v, field, Some(suffix.to_string()));
            }
        }
    }
    out
}

impl<'c, 'a> Evaluator<'c, 'a> {
    fn eval(&self, node: &Ast, focus: &[Item<'a>], this: Option<&Item<'a>>) -> Result<Items<'a>> {
        match &node.kind {
            NodeKind::Literal(l) => Ok(vec![literal_item(l)]),
            NodeKind::EnvVariable(EnvVariable::Now) => Ok(self
                .ctx
                .now
                .map(|now| Item {
                    value: Cow::Owned(FhirValue::String(format_instant(&now))),
                    origin: Origin::Synthetic,
                    type_name: Some("dateTime".into()),
                })
                .into_iter()
                .collect()),
            NodeKind::EnvVariable(EnvVariable::Context) => Ok(self.root.clone()),
            NodeKind::This => Ok(match this {
                Some(item) => vec![item.clone()],
                None => focus.to_vec(),
            }),
            NodeKind::TypeSelector(type_name) => {
                if self.ctx.strict && !ElementDictionary::get().knows_resource(type_name) {
                    return Err(EngineError::UnknownElement {
                        path: type_name.clone(),
                    });
                }
                Ok(focus.iter().filter(|i| type_matches(i, type_name)).cloned().collect())
            }
            NodeKind::Member { base, name } => {
                let input = match base {
                    Some(b) => Cow::Owned(self.eval(b, focus, this)?),
                    None => Cow::Borrowed(focus),
                };
                let mut out = Vec::new();
                for item in input.iter() {
                    self.member(item, name, &mut out)?;
                }
                Ok(out)
            }
            NodeKind::Index { base, index } => {
                let input = self.eval(base, focus, this)?;
                let idx = self.eval(index, focus, this)?;
                let Some(i) = singleton(&idx, "[]")? else { return Ok(Vec::new()) };
                match i.value.as_ref() {
                    FhirValue::Integer(n) if *n >= 0 => Ok(input.into_iter().nth(*n as usize).into_iter().collect()),
                    FhirValue::Integer(_) => Ok(Vec::new()),
                    _ => Err(EngineError::mismatch("[]", describe(&[i]))),
                }
            }
            NodeKind::Function { base, function, args } => {
                let input = match base {
                    Some(b) => self.eval(b, focus, this)?,
                    None => focus.to_vec(),
                };
                self.call(*function, input, args, focus, this)
            }
            NodeKind::Unary { op, operand } => {
                let items = self.eval(operand, focus, this)?;
                let symbol = if *op == UnaryOp::Minus { "-" } else { "+" };
                let Some(item) = singleton(&items, symbol)? else { return Ok(Vec::new()) };
                match (op, Num::of(&item.value)) {
                    (UnaryOp::Plus, Some(_)) => Ok(vec![item.clone()]),
                    (UnaryOp::Minus, Some(Num::Int(i))) => {
                        Ok(i.checked_neg().map(|n| Item::synthetic(FhirValue::Integer(n))).into_iter().collect())
                    }
                    (UnaryOp::Minus, Some(Num::Dec(d))) => Ok(vec![Item::synthetic(FhirValue::Decimal(-d))]),
                    _ => Err(EngineError::mismatch(symbol, describe(&[item]))),
                }
            }
            NodeKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, focus, this)?;
                let r = self.eval(rhs, focus, this)?;
                self.binary(*op, l, r)
            }
        }
    }

    fn member(&self, item: &Item<'a>, name: &str, out: &mut Items<'a>) -> Result<()> {
        let base_path = match &item.origin {
            Origin::Element { resource, path } => Some((resource.clone(), path.as_str())),
            Origin::Synthetic => None,
        };
        let make_origin = |suffix: &str| match &base_path {
            Some((resource, path)) => Origin::Element {
                resource: resource.clone(),
                path: format!("{path}.{suffix}"),
            },
            None => Origin::Synthetic,
        };
        let before = out.len();
        match &item.value {
            Cow::Borrowed(v) => {
                let v: &'a FhirValue = v;
                if let FhirValue::Object(map) = v {
                    for (child, suffix, ty) in member_children(map, name) {
                        out.push(Item {
                            value: Cow::Borrowed(child),
                            origin: make_origin(&suffix),
                            type_name: ty,
                        });
                    }
                }
            }
            Cow::Owned(v) => {
                if let FhirValue::Object(map) = v {
                    for (child, suffix, ty) in member_children(map, name) {
                        out.push(Item {
                            value: Cow::Owned(child.clone()),
                            origin: make_origin(&suffix),
                            type_name: ty,
                        });
                    }
                }
            }
        }
        if self.ctx.strict && out.len() == before {
            if let FhirValue::Object(map) = item.value.as_ref() {
                let owner = map.get("resourceType").and_then(FhirValue::as_str);
                if !ElementDictionary::get().knows_element(owner, name) {
                    let parent = match (&item.origin, owner) {
                        (_, Some(t)) => t.to_string(),
                        (Origin::Element { path, .. }, None) => path.clone(),
                        (Origin::Synthetic, None) => "$this".to_string(),
                    };
                    return Err(EngineError::UnknownElement {
                        path: format!("{parent}.{name}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Evaluates `arg` once per input item with that item as focus and `$this`.
    fn per_item(&self, input: &[Item<'a>], arg: &Ast) -> Result<Vec<Items<'a>>> {
        input
            .iter()
            .map(|item| self.eval(arg, std::slice::from_ref(item), Some(item)))
            .collect()
    }

    fn filter(&self, input: Items<'a>, criteria: &Ast, name: &str) -> Result<Items<'a>> {
        let verdicts = self.per_item(&input, criteria)?;
        let mut out = Vec::new();
        for (item, verdict) in input.into_iter().zip(verdicts) {
            if to_boolean(&verdict, name)? == Some(true) {
                out.push(item);
            }
        }
        Ok(out)
    }

    fn call(
        &self,
        function: Function,
        input: Items<'a>,
        args: &[Ast],
        focus: &[Item<'a>],
        this: Option<&Item<'a>>,
    ) -> Result<Items<'a>> {
        let name = function.name();
        match function {
            Function::Where => self.filter(input, &args[0], name),
            Function::Select => Ok(self.per_item(&input, &args[0])?.into_iter().flatten().collect()),
            Function::Exists => {
                let input = match args.first() {
                    Some(criteria) => self.filter(input, criteria, name)?,
                    None => input,
                };
                Ok(boolean(!input.is_empty()))
            }
            Function::Empty => Ok(boolean(input.is_empty())),
            Function::Count => Ok(vec![Item::synthetic(FhirValue::Integer(input.len() as i64))]),
            Function::First => Ok(input.into_iter().take(1).collect()),
            Function::Last => Ok(input.into_iter().last().into_iter().collect()),
            Function::Tail => Ok(input.into_iter().skip(1).collect()),
            Function::Distinct => Ok(dedup(input)),
            Function::Not => Ok(to_boolean(&input, name)?.map(|b| boolean(!b)).unwrap_or_default()),
            Function::Iif => {
                let this_item = match input.as_slice() {
                    [one] => Some(one),
                    _ => this,
                };
                let scope: &[Item<'a>] = if args.is_empty() { focus } else { &input };
                let cond = self.eval(&args[0], scope, this_item)?;
                if to_boolean(&cond, name)? == Some(true) {
                    self.eval(&args[1], scope, this_item)
                } else if let Some(otherwise) = args.get(2) {
                    self.eval(otherwise, scope, this_item)
                } else {
                    Ok(Vec::new())
                }
            }
            Function::OfType => {
                let NodeKind::TypeSelector(type_name) = &args[0].kind else {
                    unreachable!("parser emits a type selector for ofType");
                };
                Ok(input.into_iter().filter(|i| type_matches(i, type_name)).collect())
            }
            Function::Resolve => {
                let mut out = Vec::new();
                for item in &input {
                    let reference = match item.value.as_ref() {
                        FhirValue::String(s) => Some(s.as_str()),
                        FhirValue::Object(m) => m.get("reference").and_then(FhirValue::as_str),
                        _ => None,
                    };
                    let Some(reference) = reference else { continue };
                    match self.ctx.bundle.resolve_reference(reference) {
                        Ok(Some(r)) => out.push(Item {
                            value: Cow::Borrowed(r.root()),
                            origin: Origin::Element {
                                resource: Arc::from(r.key()),
                                path: r.resource_type().to_string(),
                            },
                            type_name: None,
                        }),
                        Ok(None) => {}
                        Err(StoreError::UnsupportedReference(r)) => return Err(EngineError::UnsupportedReference(r)),
                        Err(other) => unreachable!("resolve_reference only rejects references: {other}"),
                    }
                }
                Ok(out)
            }
            Function::ToInteger => {
                let Some(item) = singleton(&input, name)? else { return Ok(Vec::new()) };
                let v = match item.value.as_ref() {
                    FhirValue::Integer(i) => Some(*i),
                    FhirValue::Boolean(b) => Some(*b as i64),
                    FhirValue::String(s) => {
                        let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
                        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                            s.parse().ok()
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                Ok(v.map(|i| Item::synthetic(FhirValue::Integer(i))).into_iter().collect())
            }
            Function::ToDecimal => {
                let Some(item) = singleton(&input, name)? else { return Ok(Vec::new()) };
                let v = match item.value.as_ref() {
                    FhirValue::Integer(i) => Some(Decimal::from(*i)),
                    FhirValue::Decimal(d) => Some(*d),
                    FhirValue::Boolean(b) => Some(if *b { Decimal::ONE } else { Decimal::ZERO }),
                    FhirValue::String(s) => {
                        let body = s.strip_prefix(['+', '-']).unwrap_or(s);
                        let valid = !body.is_empty()
                            && !body.starts_with('.')
                            && !body.ends_with('.')
                            && body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
                            && body.bytes().filter(|b| *b == b'.').count() <= 1;
                        if valid {
                            s.parse().ok()
                        } else {
                            None
                        }
                    }
                    _ => None,
                };
                Ok(v.map(|d| Item::synthetic(FhirValue::Decimal(d))).into_iter().collect())
            }
            Function::Lower | Function::Upper => {
                let Some(item) = singleton(&input, name)? else { return Ok(Vec::new()) };
                let FhirValue::String(s) = item.value.as_ref() else {
                    return Err(EngineError::mismatch(name, describe(&[item])));
                };
                let mapped = if function == Function::Lower {
                    s.to_lowercase()
                } else {
                    s.to_uppercase()
                };
                Ok(vec![Item::synthetic(FhirValue::String(mapped))])
            }
            Function::Contains | Function::StartsWith | Function::EndsWith => {
                let arg = self.eval(&args[0], focus, this)?;
                let (Some(item), Some(needle)) = (singleton(&input, name)?, singleton(&arg, name)?) else {
                    return Ok(Vec::new());
                };
                let (FhirValue::String(s), FhirValue::String(n)) = (item.value.as_ref(), needle.value.as_ref()) else {
                    return Err(EngineError::mismatch(name, describe(&[item, needle])));
                };
                let hit = match function {
                    Function::Contains => s.contains(n.as_str()),
                    Function::StartsWith => s.starts_with(n.as_str()),
                    _ => s.ends_with(n.as_str()),
                };
                Ok(boolean(hit))
            }
            Function::OrderBy | Function::MinBy | Function::MaxBy => {
                let sorted = self.order_by(input, &args[0], name)?;
                Ok(match function {
                    Function::OrderBy => sorted,
                    Function::MinBy => sorted.into_iter().take(1).collect(),
                    _ => sorted.into_iter().last().into_iter().collect(),
                })
            }
        }
    }

    /// Stable ascending sort by a per-item key; items with an empty key go last.
    fn order_by(&self, input: Items<'a>, key_expr: &Ast, name: &str) -> Result<Items<'a>> {
        let keys = self.per_item(&input, key_expr)?;
        let mut keyed: Vec<Option<Item<'a>>> = Vec::with_capacity(keys.len());
        for k in keys {
            keyed.push(singleton(&k, name)?.cloned());
        }
        let present: Vec<&Item<'a>> = keyed.iter().flatten().collect();

        enum KeyClass {
            Number,
            Temporal,
            Text,
            Boolean,
        }
        let class = if present.iter().all(|k| Num::of(&k.value).is_some()) {
            KeyClass::Number
        } else if present.iter().all(|k| temporal_of(k).is_some()) {
            KeyClass::Temporal
        } else if present.iter().all(|k| k.value.as_str().is_some() && !k.is_temporal_literal()) {
            KeyClass::Text
        } else if present.iter().all(|k| matches!(k.value.as_ref(), FhirValue::Boolean(_))) {
            KeyClass::Boolean
        } else {
            return Err(EngineError::mismatch(name, format!("mixed sort keys ({})", describe(&present))));
        };
        let cmp = |a: &Item<'a>, b: &Item<'a>| -> Ordering {
            match class {
                KeyClass::Number => Num::of(&a.value)
                    .expect("classified")
                    .cmp(Num::of(&b.value).expect("classified")),
                KeyClass::Temporal => {
                    let (x, y) = (temporal_of(a).expect("classified"), temporal_of(b).expect("classified"));
                    (x.first, x.precision).cmp(&(y.first, y.precision))
                }
                KeyClass::Text => a.value.as_str().cmp(&b.value.as_str()),
                KeyClass::Boolean => {
                    let flag = |i: &Item<'a>| matches!(i.value.as_ref(), FhirValue::Boolean(true));
                    flag(a).cmp(&flag(b))
                }
            }
        };
        let mut order: Vec<usize> = (0..input.len()).collect();
        order.sort_by(|&i, &j| match (&keyed[i], &keyed[j]) {
            (Some(a), Some(b)) => cmp(a, b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        });
        let mut slots: Vec<Option<Item<'a>>> = input.into_iter().map(Some).collect();
        Ok(order.into_iter().map(|i| slots[i].take().expect("each index once")).collect())
    }

    fn binary(&self, op: BinaryOp, l: Items<'a>, r: Items<'a>) -> Result<Items<'a>> {
        let sym = op.symbol();
        match op {
            BinaryOp::Union => Ok(dedup(l.into_iter().chain(r).collect())),
            BinaryOp::And | BinaryOp::Or => {
                let (a, b) = (to_boolean(&l, sym)?, to_boolean(&r, sym)?);
                let v = if op == BinaryOp::And {
                    match (a, b) {
                        (Some(false), _) | (_, Some(false)) => Some(false),
                        (Some(true), Some(true)) => Some(true),
                        _ => None,
                    }
                } else {
                    match (a, b) {
                        (Some(true), _) | (_, Some(true)) => Some(true),
                        (Some(false), Some(false)) => Some(false),
                        _ => None,
                    }
                };
                Ok(v.map(boolean).unwrap_or_default())
            }
            BinaryOp::Eq | BinaryOp::NotEq => {
                if l.is_empty() || r.is_empty() {
                    return Ok(Vec::new());
                }
                let eq = if l.len() != r.len() {
                    Some(false)
                } else {
                    l.iter().zip(&r).try_fold(true, |acc, (a, b)| items_equal(a, b).map(|e| acc && e))
                };
                Ok(eq.map(|e| boolean(e == (op == BinaryOp::Eq))).unwrap_or_default())
            }
            BinaryOp::In => {
                let Some(needle) = singleton(&l, sym)? else { return Ok(Vec::new()) };
                Ok(boolean(r.iter().any(|x| items_equal(needle, x) == Some(true))))
            }
            BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq => {
                let (Some(a), Some(b)) = (singleton(&l, sym)?, singleton(&r, sym)?) else {
                    return Ok(Vec::new());
                };
                let Some(ord) = compare_items(a, b, op)? else { return Ok(Vec::new()) };
                let v = match op {
                    BinaryOp::Lt => ord == Ordering::Less,
                    BinaryOp::LtEq => ord != Ordering::Greater,
                    BinaryOp::Gt => ord == Ordering::Greater,
                    _ => ord != Ordering::Less,
                };
                Ok(boolean(v))
            }
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                let (Some(a), Some(b)) = (singleton(&l, sym)?, singleton(&r, sym)?) else {
                    return Ok(Vec::new());
                };
                arithmetic(op, a, b)
            }
        }
    }
}

fn arithmetic<'a>(op: BinaryOp, a: &Item<'a>, b: &Item<'a>) -> Result<Items<'a>> {
    let out = |v: Option<FhirValue>| Ok(v.map(Item::synthetic).into_iter().collect());
    match (Num::of(&a.value), Num::of(&b.value)) {
        (Some(Num::Int(x)), Some(Num::Int(y))) if op != BinaryOp::Div => out(match op {
            BinaryOp::Add => x.checked_add(y),
            BinaryOp::Sub => x.checked_sub(y),
            _ => x.checked_mul(y),
        }
        .map(FhirValue::Integer)),
        (Some(x), Some(y)) => {
            let (x, y) = (x.dec(), y.dec());
            out(match op {
                BinaryOp::Add => x.checked_add(y),
                BinaryOp::Sub => x.checked_sub(y),
                BinaryOp::Mul => x.checked_mul(y),
                _ if y.is_zero() => None,
                _ => x.checked_div(y).map(|q| q.normalize()),
            }
            .map(FhirValue::Decimal))
        }
        _ => match (op, a.value.as_ref(), b.value.as_ref()) {
            (BinaryOp::Add, FhirValue::String(x), FhirValue::String(y))
                if !a.is_temporal_literal() && !b.is_temporal_literal() =>
            {
                out(Some(FhirValue::String(format!("{x}{y}"))))
            }
            _ => Err(EngineError::mismatch(op.symbol(), describe(&[a, b]))),
        },
    }
}

fn literal_item<'a>(l: &Literal) -> Item<'a> {
    match l {
        Literal::String(s) => Item::synthetic(FhirValue::String(s.clone())),
        Literal::Integer(i) => Item::synthetic(FhirValue::Integer(*i)),
        Literal::Decimal(d) => Item::synthetic(FhirValue::Decimal(*d)),
        Literal::Boolean(b) => Item::synthetic(FhirValue::Boolean(*b)),
        Literal::DateTime(text, parsed) => Item {
            value: Cow::Owned(FhirValue::String(text.clone())),
            origin: Origin::Synthetic,
            type_name: Some(
                if parsed.precision <= crate::temporal::Precision::Day && !text.contains('T') {
                    "date"
                } else {
                    "dateTime"
                }
                .into(),
            ),
        },
    }
}
