//! Tokenizer for the supported FHIRPath subset.

use super::error::EngineError;
use crate::temporal::PartialDateTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    StringLiteral,
    NumberLiteral,
    DateLiteral,
    BooleanLiteral,
    Symbol,
    EnvVariable,
}

/// A token with its exact source text and byte offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub offset: usize,
}

impl Token {
    pub fn end(&self) -> usize {
        self.offset + self.text.len()
    }

    pub(crate) fn is_symbol(&self, s: &str) -> bool {
        self.kind == TokenKind::Symbol && self.text == s
    }
}

const KEYWORD_OPERATORS: &[&str] = &["and", "or", "in"];

pub fn tokenize(input: &str) -> Result<Vec<Token>, EngineError> {
    Lexer { input, pos: 0 }.run()
}

struct Lexer<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn peek_at(&self, skip: usize) -> Option<char> {
        self.input[self.pos..].chars().nth(skip)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn err(&self, at: usize, expected: &str) -> EngineError {
        EngineError::parse(self.input, at, expected)
    }

    fn run(mut self) -> Result<Vec<Token>, EngineError> {
        let mut tokens: Vec<Token> = Vec::new();
        loop {
            self.take_while(char::is_whitespace);
            let Some(c) = self.peek() else { break };
            let start = self.pos;
            let kind = match c {
                'a'..='z' | 'A'..='Z' | '_' => {
                    self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    match &self.input[start..self.pos] {
                        "true" | "false" => TokenKind::BooleanLiteral,
                        w if KEYWORD_OPERATORS.contains(&w) => TokenKind::Symbol,
                        _ => TokenKind::Identifier,
                    }
                }
                '`' => {
                    self.pos += 1;
                    self.take_while(|c| c != '`');
                    if self.peek() != Some('`') {
                        return Err(self.err(start, "closing '`'"));
                    }
                    self.pos += 1;
                    TokenKind::Identifier
                }
                '$' => {
                    self.pos += 1;
                    self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    if &self.input[start..self.pos] != "$this" {
                        return Err(self.err(start, "$this"));
                    }
                    TokenKind::Identifier
                }
                '%' => {
                    self.pos += 1;
                    let name_start = self.pos;
                    self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    if self.pos == name_start {
                        return Err(self.err(start, "environment variable name after '%'"));
                    }
                    TokenKind::EnvVariable
                }
                '\'' => {
                    self.pos += 1;
                    loop {
                        match self.peek() {
                            None => return Err(self.err(start, "closing quote")),
                            Some('\\') => {
                                self.pos += 1;
                                match self.peek() {
                                    Some(c) => self.pos += c.len_utf8(),
                                    None => return Err(self.err(start, "closing quote")),
                                }
                            }
                            Some('\'') => {
                                self.pos += 1;
                                break;
                            }
                            Some(c) => self.pos += c.len_utf8(),
                        }
                    }
                    TokenKind::StringLiteral
                }
                '0'..='9' => {
                    self.take_while(|c| c.is_ascii_digit());
                    if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                        self.take_while(|c| c.is_ascii_digit());
                    }
                    TokenKind::NumberLiteral
                }
                '@' => {
                    self.pos += 1;
                    self.take_while(|c| c.is_ascii_digit() || matches!(c, '-' | ':' | 'T' | 'Z' | '.'));
                    // a zone offset such as +05:00 directly after a time
                    if matches!(self.peek(), Some('+') | Some('-')) && self.input[start..self.pos].contains('T') {
                        let save = self.pos;
                        self.pos += 1;
                        self.take_while(|c| c.is_ascii_digit() || c == ':');
                        if self.pos - save != 6 {
                            self.pos = save;
                        }
                    }
                    let body = &self.input[start + 1..self.pos];
                    if PartialDateTime::parse(body.strip_suffix('T').unwrap_or(body)).is_none() {
                        return Err(self.err(start, "date literal such as @2185-03-01"));
                    }
                    TokenKind::DateLiteral
                }
                '.' => {
                    self.pos += 1;
                    if self.peek() == Some('.') {
                        return Err(self.err(self.pos, "identifier after '.'"));
                    }
                    TokenKind::Symbol
                }
                '!' | '<' | '>' => {
                    self.pos += 1;
                    if self.peek() == Some('=') {
                        self.pos += 1;
                    } else if c == '!' {
                        return Err(self.err(start, "'!='"));
                    }
                    TokenKind::Symbol
                }
                ',' | '(' | ')' | '[' | ']' | '=' | '+' | '-' | '*' | '/' | '|' => {
                    self.pos += 1;
                    TokenKind::Symbol
                }
                _ => return Err(self.err(start, "a FHIRPath token")),
            };
            tokens.push(Token {
                kind,
                text: self.input[start..self.pos].to_string(),
                offset: start,
            });
        }
        Ok(tokens)
    }
}

/// Decodes the body of a quoted string literal.
pub(crate) fn unescape(quoted: &str) -> Option<String> {
    let body = &quoted[1..quoted.len() - 1];
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'f' => out.push('\u{c}'),
            'u' => {
                let hex: String = chars.by_ref().take(4).collect();
                out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
            }
            other => out.push(other),
        }
    }
    Some(out)
}

/// Escapes text for embedding inside a single-quoted FHIRPath string.
pub fn escape_string(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len() + 2);
    for c in raw.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(s: &str) -> Vec<(TokenKind, String)> {
        tokenize(s).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn simple_path() {
        use TokenKind::*;
        assert_eq!(
            kinds("Patient.gender"),
            vec![(Identifier, "Patient".into()), (Symbol, ".".into()), (Identifier, "gender".into())]
        );
    }

    #[test]
    fn date_literal() {
        assert_eq!(kinds("@2185-03-01"), vec![(TokenKind::DateLiteral, "@2185-03-01".into())]);
        assert_eq!(
            kinds("@2185-03-01T10:00:00+05:00 + 1")[0],
            (TokenKind::DateLiteral, "@2185-03-01T10:00:00+05:00".into())
        );
        assert!(tokenize("@2185-13-01").is_err());
    }

    #[test]
    fn double_dot_fails_at_second_dot() {
        match tokenize("Observation..value") {
            Err(EngineError::Parse { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operators_and_keywords() {
        let toks = kinds("a <= 1.5 and b != 'x' or 'y' in c | %now");
        let texts: Vec<&str> = toks.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(texts, ["a", "<=", "1.5", "and", "b", "!=", "'x'", "or", "'y'", "in", "c", "|", "%now"]);
        assert_eq!(toks[3].0, TokenKind::Symbol);
        assert_eq!(toks[12].0, TokenKind::EnvVariable);
    }

    #[test]
    fn string_escapes() {
        let t = tokenize(r"'D\'Amato\\s'").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(unescape(&t[0].text).unwrap(), r"D'Amato\s");
        assert!(tokenize("'open").is_err());
    }

    #[test]
    fn escape_round_trips() {
        let raw = "D'Amato's \\ mix\n";
        let quoted = format!("'{}'", escape_string(raw));
        let t = tokenize(&quoted).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(unescape(&t[0].text).unwrap(), raw);
    }

    proptest! {
        #[test]
        fn tokens_reconstruct_input(parts in prop::collection::vec(
            prop_oneof![
                Just("Observation"), Just("."), Just("where"), Just("("), Just(")"), Just("'a b'"),
                Just("12.5"), Just("@2185-01"), Just("="), Just("<="), Just("and"), Just("%now"), Just("$this"),
            ], 1..12),
            gaps in prop::collection::vec(prop_oneof![Just(""), Just(" "), Just("\t "), Just("\n")], 12)
        ) {
            let mut input = String::new();
            for (i, p) in parts.iter().enumerate() {
                input.push_str(gaps[i]);
                input.push_str(p);
            }
            if let Ok(tokens) = tokenize(&input) {
                let mut rebuilt = String::new();
                for t in &tokens {
                    prop_assert_eq!(&input[t.offset..t.end()], t.text.as_str());
                    let gap = &input[rebuilt.len()..t.offset];
                    prop_assert!(gap.chars().all(char::is_whitespace));
                    rebuilt.push_str(gap);
                    rebuilt.push_str(&t.text);
                }
                rebuilt.push_str(&input[rebuilt.len()..]);
                prop_assert_eq!(rebuilt, input);
            }
        }
    }
}
