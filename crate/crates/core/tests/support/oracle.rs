//! Reference evaluator for the golden corpus.
//!
//! Deliberately naive and written apart from the engine: a regex tokenizer,
//! a binding-power parser, and an evaluator over plain `serde_json::Value`
//! lists. Nothing here calls into `fpqa_core`.

use std::cmp::Ordering;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::{DateTime, Duration, FixedOffset, Months, NaiveDate, TimeZone, Utc};
use regex::Regex;
use rust_decimal::Decimal;
use serde_json::Value;

/// Error classes, spelled like the engine's error kinds.
pub type Res<T> = Result<T, &'static str>;

const MISMATCH: &str = "TypeMismatch";

#[derive(Clone, Debug)]
struct It {
    v: Value,
    tag: Option<String>,
}

impl It {
    fn plain(v: Value) -> It {
        It { v, tag: None }
    }

    fn dated(&self) -> bool {
        matches!(
            self.tag.as_deref(),
            Some("date" | "dateTime" | "Date" | "DateTime" | "instant")
        )
    }
}

#[derive(Debug, Clone)]
enum Ex {
    Lit(Value, Option<String>),
    Now,
    Ctx,
    This,
    Ty(String),
    Name(String),
    Get(Box<Ex>, String),
    Call(Option<Box<Ex>>, String, Vec<Ex>),
    Idx(Box<Ex>, Box<Ex>),
    Neg(Box<Ex>),
    Pos(Box<Ex>),
    Bin(&'static str, Box<Ex>, Box<Ex>),
}

// ---------------------------------------------------------------- tokens

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Date(String),
    Str(String),
    Num(String),
    Env(String),
    This,
    Id(String, bool),
    Op(String),
}

static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"^(?:(?P<ws>\s+)",
        r"|(?P<date>@\d{4}(?:-\d{2}(?:-\d{2}(?:T\d{2}(?::\d{2}(?::\d{2}(?:\.\d+)?)?)?(?:Z|[+-]\d{2}:\d{2})?)?)?)?)",
        r"|(?P<str>'(?:[^'\\]|\\.)*')",
        r"|(?P<num>\d+(?:\.\d+)?)",
        r"|(?P<env>%\w+)",
        r"|(?P<this>\$this\b)",
        r"|(?P<tick>`[^`]*`)",
        r"|(?P<id>[A-Za-z_]\w*)",
        r"|(?P<op><=|>=|!=|[-+*/|=<>().,\[\]]))"
    ))
    .unwrap()
});

fn unquote(s: &str) -> Res<String> {
    let mut out = String::new();
    let mut it = s[1..s.len() - 1].chars();
    while let Some(c) = it.next() {
        if c == '\\' {
            out.push(match it.next() {
                Some('n') => '\n',
                Some('r') => '\r',
                Some('t') => '\t',
                Some('f') => '\u{c}',
                Some(c @ ('\'' | '"' | '`' | '\\' | '/')) => c,
                _ => return Err("ParseError"),
            });
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

fn lex(src: &str) -> Res<Vec<Tok>> {
    let mut rest = src;
    let mut out = Vec::new();
    while !rest.is_empty() {
        let caps = TOKEN.captures(rest).ok_or("ParseError")?;
        let whole = caps.get(0).unwrap().as_str();
        if whole.is_empty() {
            return Err("ParseError");
        }
        let g = |n: &str| caps.name(n).map(|m| m.as_str().to_string());
        if let Some(d) = g("date") {
            out.push(Tok::Date(d[1..].to_string()));
        } else if let Some(s) = g("str") {
            out.push(Tok::Str(unquote(&s)?));
        } else if let Some(n) = g("num") {
            out.push(Tok::Num(n));
        } else if let Some(e) = g("env") {
            out.push(Tok::Env(e));
        } else if g("this").is_some() {
            out.push(Tok::This);
        } else if let Some(t) = g("tick") {
            out.push(Tok::Id(t[1..t.len() - 1].to_string(), true));
        } else if let Some(i) = g("id") {
            match i.as_str() {
                "and" | "or" | "in" => out.push(Tok::Op(i)),
                _ => out.push(Tok::Id(i, false)),
            }
        } else if let Some(o) = g("op") {
            out.push(Tok::Op(o));
        }
        rest = &rest[whole.len()..];
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

const ARITY: &[(&str, usize, usize)] = &[
    ("where", 1, 1),
    ("select", 1, 1),
    ("exists", 0, 1),
    ("empty", 0, 0),
    ("count", 0, 0),
    ("first", 0, 0),
    ("last", 0, 0),
    ("tail", 0, 0),
    ("distinct", 0, 0),
    ("not", 0, 0),
    ("iif", 2, 3),
    ("ofType", 1, 1),
    ("resolve", 0, 0),
    ("toInteger", 0, 0),
    ("toDecimal", 0, 0),
    ("lower", 0, 0),
    ("upper", 0, 0),
    ("contains", 1, 1),
    ("startsWith", 1, 1),
    ("endsWith", 1, 1),
    ("orderBy", 1, 1),
    ("minBy", 1, 1),
    ("maxBy", 1, 1),
];

fn power(op: &str) -> Option<(u8, &'static str)> {
    Some(match op {
        "or" => (1, "or"),
        "and" => (2, "and"),
        "in" => (3, "in"),
        "=" => (4, "="),
        "!=" => (4, "!="),
        "<" => (5, "<"),
        "<=" => (5, "<="),
        ">" => (5, ">"),
        ">=" => (5, ">="),
        "|" => (6, "|"),
        "+" => (7, "+"),
        "-" => (7, "-"),
        "*" => (8, "*"),
        "/" => (8, "/"),
        _ => return None,
    })
}

struct P {
    toks: Vec<Tok>,
    at: usize,
}

impl P {
    fn peek_op(&self, s: &str) -> bool {
        matches!(self.toks.get(self.at), Some(Tok::Op(o)) if o == s)
    }

    fn want(&mut self, s: &str) -> Res<()> {
        if self.peek_op(s) {
            self.at += 1;
            Ok(())
        } else {
            Err("ParseError")
        }
    }

    fn expr(&mut self, min: u8) -> Res<Ex> {
        let mut lhs = self.prefix()?;
        loop {
            let Some(Tok::Op(o)) = self.toks.get(self.at) else { break };
            let Some((bp, name)) = power(o) else { break };
            if bp < min {
                break;
            }
            self.at += 1;
            let rhs = self.expr(bp + 1)?;
            lhs = Ex::Bin(name, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Res<Ex> {
        if self.peek_op("-") {
            self.at += 1;
            return Ok(Ex::Neg(Box::new(self.prefix()?)));
        }
        if self.peek_op("+") {
            self.at += 1;
            return Ok(Ex::Pos(Box::new(self.prefix()?)));
        }
        let mut e = self.atom()?;
        loop {
            if self.peek_op(".") {
                self.at += 1;
                let name = match self.toks.get(self.at) {
                    Some(Tok::Id(n, _)) => n.clone(),
                    _ => return Err("ParseError"),
                };
                self.at += 1;
                e = if self.peek_op("(") {
                    self.call(Some(e), name)?
                } else {
                    Ex::Get(Box::new(e), name)
                };
            } else if self.peek_op("[") {
                self.at += 1;
                let i = self.expr(0)?;
                self.want("]")?;
                e = Ex::Idx(Box::new(e), Box::new(i));
            } else {
                return Ok(e);
            }
        }
    }

    fn call(&mut self, base: Option<Ex>, name: String) -> Res<Ex> {
        let (_, lo, hi) = *ARITY.iter().find(|(n, ..)| *n == name).ok_or("UnknownFunction")?;
        self.want("(")?;
        let mut args = Vec::new();
        if !self.peek_op(")") {
            loop {
                args.push(self.expr(0)?);
                if self.peek_op(",") {
                    self.at += 1;
                } else {
                    break;
                }
            }
        }
        self.want(")")?;
        if args.len() < lo || args.len() > hi {
            return Err("ArityError");
        }
        Ok(Ex::Call(base.map(Box::new), name, args))
    }

    fn atom(&mut self) -> Res<Ex> {
        let t = self.toks.get(self.at).cloned().ok_or("ParseError")?;
        self.at += 1;
        Ok(match t {
            Tok::Date(d) => {
                let tag = if d.contains('T') { "dateTime" } else { "date" };
                Ex::Lit(Value::String(d), Some(tag.into()))
            }
            Tok::Str(s) => Ex::Lit(Value::String(s), None),
            Tok::Num(n) => Ex::Lit(serde_json::from_str(&n).map_err(|_| "ParseError")?, None),
            Tok::Env(e) => match e.as_str() {
                "%now" => Ex::Now,
                "%context" => Ex::Ctx,
                _ => return Err("ParseError"),
            },
            Tok::This => Ex::This,
            Tok::Id(name, ticked) => {
                if name == "true" || name == "false" {
                    Ex::Lit(Value::Bool(name == "true"), None)
                } else if self.peek_op("(") {
                    self.call(None, name)?
                } else if !ticked && name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Ex::Ty(name)
                } else {
                    Ex::Name(name)
                }
            }
            Tok::Op(o) if o == "(" => {
                let e = self.expr(0)?;
                self.want(")")?;
                e
            }
            Tok::Op(_) => return Err("ParseError"),
        })
    }
}

fn parse(src: &str) -> Res<Ex> {
    let mut p = P { toks: lex(src)?, at: 0 };
    let e = p.expr(0)?;
    if p.at != p.toks.len() {
        return Err("ParseError");
    }
    Ok(e)
}

// ---------------------------------------------------------------- values

#[derive(Clone, Copy)]
enum N {
    I(i64),
    D(Decimal),
}

fn num(v: &Value) -> Option<N> {
    let Value::Number(n) = v else { return None };
    let text = n.to_string();
    if !text.contains(['.', 'e', 'E']) {
        if let Ok(i) = text.parse() {
            return Some(N::I(i));
        }
    }
    Decimal::from_str(&text).or_else(|_| Decimal::from_scientific(&text)).ok().map(N::D)
}

fn as_dec(n: N) -> Decimal {
    match n {
        N::I(i) => Decimal::from(i),
        N::D(d) => d,
    }
}

fn num_cmp(a: N, b: N) -> Ordering {
    match (a, b) {
        (N::I(x), N::I(y)) => x.cmp(&y),
        _ => as_dec(a).cmp(&as_dec(b)),
    }
}

fn dec_value(d: Decimal) -> Value {
    serde_json::from_str(&d.to_string()).unwrap()
}

fn deep_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(_), Value::Number(_)) => match (num(a), num(b)) {
            (Some(N::I(x)), Some(N::I(y))) => x == y,
            (Some(N::D(x)), Some(N::D(y))) => x == y,
            _ => false,
        },
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| deep_eq(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| deep_eq(v, w)))
        }
        _ => a == b,
    }
}

/// (first instant, last instant, precision rank with ms folded into seconds)
type Span = (DateTime<Utc>, DateTime<Utc>, u8);

static STAMP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(\d{4})(?:-(\d\d)(?:-(\d\d)(?:T(\d\d)(?::(\d\d)(?::(\d\d)(?:\.(\d+))?)?)?(Z|[+-]\d\d:\d\d)?)?)?)?$").unwrap()
});

fn span_of(s: &str) -> Option<Span> {
    let c = STAMP.captures(s)?;
    let part = |i: usize| c.get(i).map(|m| m.as_str().parse::<u32>().unwrap());
    let y: i32 = c[1].parse().ok()?;
    let fields = [part(2), part(3), part(4), part(5), part(6)];
    let rank = 1 + fields.iter().take_while(|f| f.is_some()).count() as u8;
    let ms = c.get(7).map(|m| format!("{:0<3}", m.as_str())[..3].parse::<i64>().unwrap());
    let date = NaiveDate::from_ymd_opt(y, part(2).unwrap_or(1), part(3).unwrap_or(1))?;
    let naive = date.and_hms_opt(part(4).unwrap_or(0), part(5).unwrap_or(0), part(6).unwrap_or(0))?
        + Duration::milliseconds(ms.unwrap_or(0));
    let start = match c.get(8).map(|m| m.as_str()) {
        None | Some("Z") => Utc.from_utc_datetime(&naive),
        Some(off) => {
            let secs = (off[1..3].parse::<i32>().ok()? * 60 + off[4..6].parse::<i32>().ok()?) * 60;
            let tz = FixedOffset::east_opt(if off.starts_with('-') { -secs } else { secs })?;
            tz.from_local_datetime(&naive).single()?.with_timezone(&Utc)
        }
    };
    let next = match (rank, ms) {
        (_, Some(_)) => start + Duration::milliseconds(1),
        (1, _) => start.checked_add_months(Months::new(12))?,
        (2, _) => start.checked_add_months(Months::new(1))?,
        (3, _) => start + Duration::days(1),
        (4, _) => start + Duration::hours(1),
        (5, _) => start + Duration::minutes(1),
        _ => start + Duration::seconds(1),
    };
    Some((start, next - Duration::milliseconds(1), rank))
}

fn span_cmp(a: Span, b: Span) -> Option<Ordering> {
    if a.2 == b.2 {
        Some(a.0.cmp(&b.0))
    } else if a.1 < b.0 {
        Some(Ordering::Less)
    } else if a.0 > b.1 {
        Some(Ordering::Greater)
    } else {
        None
    }
}

fn text(i: &It) -> Option<&str> {
    i.v.as_str()
}

fn same(a: &It, b: &It) -> Option<bool> {
    if let (Some(x), Some(y)) = (num(&a.v), num(&b.v)) {
        return Some(num_cmp(x, y) == Ordering::Equal);
    }
    if let (Some(x), Some(y)) = (text(a), text(b)) {
        if a.dated() || b.dated() {
            return match (span_of(x), span_of(y)) {
                (Some(p), Some(q)) => span_cmp(p, q).map(|o| o == Ordering::Equal),
                _ => Some(false),
            };
        }
        return Some(x == y);
    }
    Some(deep_eq(&a.v, &b.v))
}

fn order(a: &It, b: &It) -> Res<Option<Ordering>> {
    if let (Some(x), Some(y)) = (num(&a.v), num(&b.v)) {
        return Ok(Some(num_cmp(x, y)));
    }
    let (Some(x), Some(y)) = (text(a), text(b)) else { return Err(MISMATCH) };
    match (span_of(x), span_of(y)) {
        (Some(p), Some(q)) => Ok(span_cmp(p, q)),
        _ if a.dated() || b.dated() => Err(MISMATCH),
        _ => Ok(Some(x.cmp(y))),
    }
}

fn is_type(i: &It, name: &str) -> bool {
    if let Some(t) = &i.tag {
        return t.eq_ignore_ascii_case(name);
    }
    let kind = match &i.v {
        Value::Object(m) => return m.get("resourceType").and_then(Value::as_str) == Some(name),
        Value::String(_) => "string",
        Value::Bool(_) => "boolean",
        Value::Number(_) => match num(&i.v) {
            Some(N::I(_)) => "integer",
            _ => "decimal",
        },
        _ => return false,
    };
    kind.eq_ignore_ascii_case(name)
}

fn one<'x>(items: &'x [It]) -> Res<Option<&'x It>> {
    match items.len() {
        0 => Ok(None),
        1 => Ok(Some(&items[0])),
        _ => Err(MISMATCH),
    }
}

fn truth(items: &[It]) -> Res<Option<bool>> {
    Ok(one(items)?.map(|i| i.v.as_bool().unwrap_or(true)))
}

fn yes_no(b: bool) -> Vec<It> {
    vec![It::plain(Value::Bool(b))]
}

fn uniq(items: Vec<It>) -> Vec<It> {
    let mut out: Vec<It> = Vec::new();
    for i in items {
        if !out.iter().any(|o| deep_eq(&o.v, &i.v)) {
            out.push(i);
        }
    }
    out
}

fn spill(v: &Value, tag: Option<String>, out: &mut Vec<It>) {
    match v {
        Value::Null => {}
        Value::Array(xs) => {
            for x in xs.iter().filter(|x| !x.is_null()) {
                out.push(It { v: x.clone(), tag: tag.clone() });
            }
        }
        other => out.push(It { v: other.clone(), tag }),
    }
}

fn children(i: &It, name: &str, out: &mut Vec<It>) {
    let Value::Object(m) = &i.v else { return };
    if let Some(v) = m.get(name) {
        spill(v, None, out);
        return;
    }
    for (k, v) in m {
        if let Some(rest) = k.strip_prefix(name) {
            if rest.starts_with(|c: char| c.is_ascii_uppercase()) {
                spill(v, Some(rest.to_string()), out);
            }
        }
    }
}

// ---------------------------------------------------------------- evaluator

/// Clock fields scanned for `%now`, by resource type.
const STAMP_FIELDS: &[(&str, &[&[&str]])] = &[
    ("Encounter", &[&["period", "start"], &["period", "end"]]),
    ("Observation", &[&["effectiveDateTime"], &["effectivePeriod", "start"], &["effectivePeriod", "end"]]),
    ("Condition", &[&["recordedDate"], &["onsetDateTime"]]),
    ("MedicationRequest", &[&["authoredOn"]]),
    (
        "MedicationAdministration",
        &[&["effectiveDateTime"], &["effectivePeriod", "start"], &["effectivePeriod", "end"]],
    ),
    ("Procedure", &[&["performedDateTime"], &["performedPeriod", "start"], &["performedPeriod", "end"]]),
    ("Specimen", &[&["collection", "collectedDateTime"]]),
];

pub struct Oracle {
    resources: Vec<Value>,
    now: Option<String>,
}

impl Oracle {
    pub fn new(resources: Vec<Value>) -> Oracle {
        let mut latest: Option<DateTime<Utc>> = None;
        for r in &resources {
            let ty = r["resourceType"].as_str().unwrap_or_default();
            for (_, paths) in STAMP_FIELDS.iter().filter(|(t, _)| *t == ty) {
                for path in paths.iter() {
                    let mut v = r;
                    for p in path.iter() {
                        v = &v[*p];
                    }
                    if let Some(s) = v.as_str().and_then(span_of) {
                        latest = latest.max(Some(s.0));
                    }
                }
            }
        }
        Oracle {
            resources,
            now: latest.map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string()),
        }
    }

    /// Canonical JSON array text of the result, or the error class.
    pub fn run(&self, src: &str) -> Res<String> {
        let e = parse(src)?;
        let root: Vec<It> = self.resources.iter().cloned().map(It::plain).collect();
        let out = self.ev(&e, &root, None)?;
        Ok(serde_json::to_string(&Value::Array(out.into_iter().map(|i| i.v).collect())).unwrap())
    }

    fn ev(&self, e: &Ex, focus: &[It], this: Option<&It>) -> Res<Vec<It>> {
        match e {
            Ex::Lit(v, tag) => Ok(vec![It { v: v.clone(), tag: tag.clone() }]),
            Ex::Now => Ok(self
                .now
                .iter()
                .map(|n| It { v: Value::String(n.clone()), tag: Some("dateTime".into()) })
                .collect()),
            Ex::Ctx => Ok(self.resources.iter().cloned().map(It::plain).collect()),
            Ex::This => Ok(match this {
                Some(t) => vec![t.clone()],
                None => focus.to_vec(),
            }),
            Ex::Ty(n) => Ok(focus.iter().filter(|i| is_type(i, n)).cloned().collect()),
            Ex::Name(n) => {
                let mut out = Vec::new();
                for i in focus {
                    children(i, n, &mut out);
                }
                Ok(out)
            }
            Ex::Get(base, n) => {
                let mut out = Vec::new();
                for i in &self.ev(base, focus, this)? {
                    children(i, n, &mut out);
                }
                Ok(out)
            }
            Ex::Idx(base, idx) => {
                let items = self.ev(base, focus, this)?;
                let idx = self.ev(idx, focus, this)?;
                let Some(i) = one(&idx)? else { return Ok(vec![]) };
                match num(&i.v) {
                    Some(N::I(k)) if k >= 0 => Ok(items.into_iter().skip(k as usize).take(1).collect()),
                    Some(N::I(_)) => Ok(vec![]),
                    _ => Err(MISMATCH),
                }
            }
            Ex::Neg(x) | Ex::Pos(x) => {
                let items = self.ev(x, focus, this)?;
                let Some(i) = one(&items)? else { return Ok(vec![]) };
                match (matches!(e, Ex::Neg(_)), num(&i.v)) {
                    (false, Some(_)) => Ok(vec![i.clone()]),
                    (true, Some(N::I(k))) => Ok(k.checked_neg().map(|k| It::plain(k.into())).into_iter().collect()),
                    (true, Some(N::D(d))) => Ok(vec![It::plain(dec_value(-d))]),
                    _ => Err(MISMATCH),
                }
            }
            Ex::Bin(op, l, r) => {
                let a = self.ev(l, focus, this)?;
                let b = self.ev(r, focus, this)?;
                bin(op, a, b)
            }
            Ex::Call(base, name, args) => {
                let input = match base {
                    Some(b) => self.ev(b, focus, this)?,
                    None => focus.to_vec(),
                };
                self.func(name, input, args, focus, this)
            }
        }
    }

    fn keep(&self, input: Vec<It>, crit: &Ex) -> Res<Vec<It>> {
        let mut out = Vec::new();
        for i in input {
            if truth(&self.ev(crit, std::slice::from_ref(&i), Some(&i))?)? == Some(true) {
                out.push(i);
            }
        }
        Ok(out)
    }

    fn func(&self, name: &str, input: Vec<It>, args: &[Ex], focus: &[It], this: Option<&It>) -> Res<Vec<It>> {
        match name {
            "where" => self.keep(input, &args[0]),
            "select" => {
                let mut out = Vec::new();
                for i in &input {
                    out.extend(self.ev(&args[0], std::slice::from_ref(i), Some(i))?);
                }
                Ok(out)
            }
            "exists" => {
                let kept = match args.first() {
                    Some(c) => self.keep(input, c)?,
                    None => input,
                };
                Ok(yes_no(!kept.is_empty()))
            }
            "empty" => Ok(yes_no(input.is_empty())),
            "count" => Ok(vec![It::plain((input.len() as i64).into())]),
            "first" => Ok(input.into_iter().take(1).collect()),
            "last" => Ok(input.into_iter().rev().take(1).collect()),
            "tail" => Ok(input.into_iter().skip(1).collect()),
            "distinct" => Ok(uniq(input)),
            "not" => Ok(truth(&input)?.map(|b| yes_no(!b)).unwrap_or_default()),
            "iif" => {
                let t = if input.len() == 1 { Some(&input[0]) } else { this };
                let cond = self.ev(&args[0], &input, t)?;
                if truth(&cond)? == Some(true) {
                    self.ev(&args[1], &input, t)
                } else if let Some(other) = args.get(2) {
                    self.ev(other, &input, t)
                } else {
                    Ok(vec![])
                }
            }
            "ofType" => {
                let ty = match &args[0] {
                    Ex::Ty(n) | Ex::Name(n) | Ex::Get(_, n) => n.clone(),
                    _ => return Err("ParseError"),
                };
                Ok(input.into_iter().filter(|i| is_type(i, &ty)).collect())
            }
            "resolve" => {
                let mut out = Vec::new();
                for i in &input {
                    let target = match &i.v {
                        Value::String(s) => s.as_str(),
                        Value::Object(m) => match m.get("reference").and_then(Value::as_str) {
                            Some(s) => s,
                            None => continue,
                        },
                        _ => continue,
                    };
                    let parts: Vec<&str> = target.split('/').collect();
                    if target.starts_with('#') || target.contains("://") || target.starts_with("urn:") || parts.len() != 2 {
                        return Err("UnsupportedReference");
                    }
                    if let Some(r) = self.resources.iter().find(|r| r["resourceType"] == parts[0] && r["id"] == parts[1]) {
                        out.push(It::plain(r.clone()));
                    }
                }
                Ok(out)
            }
            "toInteger" => {
                let Some(i) = one(&input)? else { return Ok(vec![]) };
                static INT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?\d+$").unwrap());
                let v = match (&i.v, num(&i.v)) {
                    (_, Some(N::I(k))) => Some(k),
                    (Value::Bool(b), _) => Some(*b as i64),
                    (Value::String(s), _) if INT.is_match(s) => s.parse().ok(),
                    _ => None,
                };
                Ok(v.map(|k| It::plain(k.into())).into_iter().collect())
            }
            "toDecimal" => {
                let Some(i) = one(&input)? else { return Ok(vec![]) };
                static DEC: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[+-]?\d+(\.\d+)?$").unwrap());
                let v = match (&i.v, num(&i.v)) {
                    (_, Some(n)) => Some(as_dec(n)),
                    (Value::Bool(b), _) => Some(if *b { Decimal::ONE } else { Decimal::ZERO }),
                    (Value::String(s), _) if DEC.is_match(s) => Decimal::from_str(s).ok(),
                    _ => None,
                };
                Ok(v.map(|d| It::plain(dec_value(d))).into_iter().collect())
            }
            "lower" | "upper" => {
                let Some(i) = one(&input)? else { return Ok(vec![]) };
                let s = text(i).ok_or(MISMATCH)?;
                let mapped = if name == "lower" { s.to_lowercase() } else { s.to_uppercase() };
                Ok(vec![It::plain(Value::String(mapped))])
            }
            "contains" | "startsWith" | "endsWith" => {
                let arg = self.ev(&args[0], focus, this)?;
                let (Some(s), Some(n)) = (one(&input)?, one(&arg)?) else { return Ok(vec![]) };
                let (Some(s), Some(n)) = (text(s), text(n)) else { return Err(MISMATCH) };
                Ok(yes_no(match name {
                    "contains" => s.contains(n),
                    "startsWith" => s.starts_with(n),
                    _ => s.ends_with(n),
                }))
            }
            "orderBy" | "minBy" | "maxBy" => {
                let mut keyed = Vec::new();
                for i in input {
                    let k = self.ev(&args[0], std::slice::from_ref(&i), Some(&i))?;
                    keyed.push((one(&k)?.cloned(), i));
                }
                let keys: Vec<&It> = keyed.iter().filter_map(|(k, _)| k.as_ref()).collect();
                let class = if keys.iter().all(|k| num(&k.v).is_some()) {
                    0
                } else if keys.iter().all(|k| text(k).and_then(span_of).is_some()) {
                    1
                } else if keys.iter().all(|k| text(k).is_some() && !k.dated()) {
                    2
                } else if keys.iter().all(|k| k.v.is_boolean()) {
                    3
                } else {
                    return Err(MISMATCH);
                };
                let cmp = |a: &It, b: &It| match class {
                    0 => num_cmp(num(&a.v).unwrap(), num(&b.v).unwrap()),
                    1 => {
                        let (p, q) = (span_of(text(a).unwrap()).unwrap(), span_of(text(b).unwrap()).unwrap());
                        (p.0, p.2).cmp(&(q.0, q.2))
                    }
                    2 => text(a).cmp(&text(b)),
                    _ => a.v.as_bool().cmp(&b.v.as_bool()),
                };
                // insertion sort: stable and obviously so
                let mut sorted: Vec<(Option<It>, It)> = Vec::new();
                for (k, i) in keyed {
                    let mut at = sorted.len();
                    while at > 0 {
                        let before = match (&sorted[at - 1].0, &k) {
                            (Some(p), Some(q)) => cmp(p, q) == Ordering::Greater,
                            (None, Some(_)) => true,
                            _ => false,
                        };
                        if !before {
                            break;
                        }
                        at -= 1;
                    }
                    sorted.insert(at, (k, i));
                }
                let items: Vec<It> = sorted.into_iter().map(|(_, i)| i).collect();
                Ok(match name {
                    "orderBy" => items,
                    "minBy" => items.into_iter().take(1).collect(),
                    _ => items.into_iter().rev().take(1).collect(),
                })
            }
            _ => Err("UnknownFunction"),
        }
    }
}

fn bin(op: &str, a: Vec<It>, b: Vec<It>) -> Res<Vec<It>> {
    match op {
        "|" => Ok(uniq(a.into_iter().chain(b).collect())),
        "and" | "or" => {
            let (x, y) = (truth(&a)?, truth(&b)?);
            let v = if op == "and" {
                if x == Some(false) || y == Some(false) {
                    Some(false)
                } else if x == Some(true) && y == Some(true) {
                    Some(true)
                } else {
                    None
                }
            } else if x == Some(true) || y == Some(true) {
                Some(true)
            } else if x == Some(false) && y == Some(false) {
                Some(false)
            } else {
                None
            };
            Ok(v.map(yes_no).unwrap_or_default())
        }
        "=" | "!=" => {
            if a.is_empty() || b.is_empty() {
                return Ok(vec![]);
            }
            let mut all = a.len() == b.len();
            if all {
                for (x, y) in a.iter().zip(&b) {
                    match same(x, y) {
                        None => return Ok(vec![]),
                        Some(e) => all &= e,
                    }
                }
            }
            Ok(yes_no(all == (op == "=")))
        }
        "in" => {
            let Some(x) = one(&a)? else { return Ok(vec![]) };
            Ok(yes_no(b.iter().any(|y| same(x, y) == Some(true))))
        }
        "<" | "<=" | ">" | ">=" => {
            let (Some(x), Some(y)) = (one(&a)?, one(&b)?) else { return Ok(vec![]) };
            let Some(o) = order(x, y)? else { return Ok(vec![]) };
            Ok(yes_no(match op {
                "<" => o.is_lt(),
                "<=" => o.is_le(),
                ">" => o.is_gt(),
                _ => o.is_ge(),
            }))
        }
        _ => {
            let (Some(x), Some(y)) = (one(&a)?, one(&b)?) else { return Ok(vec![]) };
            match (num(&x.v), num(&y.v)) {
                (Some(N::I(p)), Some(N::I(q))) if op != "/" => {
                    let r = match op {
                        "+" => p.checked_add(q),
                        "-" => p.checked_sub(q),
                        _ => p.checked_mul(q),
                    };
                    Ok(r.map(|k| It::plain(k.into())).into_iter().collect())
                }
                (Some(p), Some(q)) => {
                    let (p, q) = (as_dec(p), as_dec(q));
                    let r = match op {
                        "+" => p.checked_add(q),
                        "-" => p.checked_sub(q),
                        "*" => p.checked_mul(q),
                        _ if q.is_zero() => None,
                        _ => p.checked_div(q).map(|d| d.normalize()),
                    };
                    Ok(r.map(|d| It::plain(dec_value(d))).into_iter().collect())
                }
                _ => match (op, text(x), text(y)) {
                    ("+", Some(s), Some(t)) if !x.dated() && !y.dated() => Ok(vec![It::plain(Value::String(format!("{s}{t}")))]),
                    _ => Err(MISMATCH),
                },
            }
        }
    }
}
