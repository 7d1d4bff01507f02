use std::fmt;

use super::eval::normalize_tokens;
use super::{Field, Phrase, QueryAst};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Quoted(String),
    Word(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Quoted(s) => format!("\"{s}\""),
            Tok::Word(w) => format!("`{w}`"),
            Tok::Eof => "end of query".into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self, Tok::Word(w) if w == kw)
    }
}

fn err(pos: Pos, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            _ if c.is_whitespace() => {
                chars.next();
                advance(c, &mut pos);
            }
            '(' | ')' | ',' => {
                chars.next();
                advance(c, &mut pos);
                out.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        _ => Tok::Comma,
                    },
                    start,
                ));
            }
            '"' => {
                chars.next();
                advance(c, &mut pos);
                let mut text = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            advance('"', &mut pos);
                            break;
                        }
                        Some(ch) => {
                            advance(ch, &mut pos);
                            text.push(ch);
                        }
                        None => return Err(err(start, "unterminated quoted phrase")),
                    }
                }
                out.push((Tok::Quoted(text), start));
            }
            _ => {
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '(' | ')' | ',' | '"') {
                        break;
                    }
                    word.push(ch);
                    chars.next();
                    advance(ch, &mut pos);
                }
                out.push((Tok::Word(word), start));
            }
        }
    }
    out.push((Tok::Eof, pos));
    Ok(out)
}

fn is_proximity(word: &str) -> bool {
    let upper = word.to_ascii_uppercase();
    ["W/", "PRE/"].iter().any(|p| {
        upper
            .strip_prefix(p)
            .is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()))
    })
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn reject_proximity(&self) -> Result<(), SyntaxError> {
        if let Tok::Word(w) = self.peek() {
            if is_proximity(w) {
                return Err(err(self.pos(), format!("unsupported operator `{w}`")));
            }
        }
        Ok(())
    }

    fn or(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut items = vec![self.and()?];
        while self.peek().is_keyword("OR") {
            self.bump();
            items.push(self.and()?);
        }
        self.reject_proximity()?;
        Ok(collapse(items, QueryAst::Or))
    }

    fn and(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut items = vec![self.and_not()?];
        while self.peek().is_keyword("AND") && !self.peek_at(1).is_keyword("NOT") {
            self.bump();
            items.push(self.and_not()?);
        }
        Ok(collapse(items, QueryAst::And))
    }

    fn and_not(&mut self) -> Result<QueryAst, SyntaxError> {
        let mut left = self.primary()?;
        while self.peek().is_keyword("AND") && self.peek_at(1).is_keyword("NOT") {
            self.bump();
            self.bump();
            let right = self.primary()?;
            left = QueryAst::and_not(left, right);
        }
        Ok(left)
    }

    fn primary(&mut self) -> Result<QueryAst, SyntaxError> {
        self.reject_proximity()?;
        let (tok, pos) = self.bump();
        match tok {
            Tok::LParen => {
                let inner = self.or()?;
                self.close(pos)?;
                Ok(inner)
            }
            Tok::Word(w) if matches!(self.peek(), Tok::LParen) => {
                let field =
                    Field::from_name(&w).ok_or_else(|| err(pos, format!("unknown field `{w}`")))?;
                let (_, open) = self.bump();
                let phrases = self.phrase_list(open)?;
                self.close(open)?;
                let mut matches: Vec<QueryAst> = phrases
                    .into_iter()
                    .map(|phrase| QueryAst::field(field, phrase))
                    .collect();
                Ok(if matches.len() == 1 {
                    matches.pop().expect("one match")
                } else {
                    QueryAst::Or(matches)
                })
            }
            Tok::Word(w) if matches!(w.as_str(), "AND" | "OR" | "NOT") => Err(err(
                pos,
                format!("operator `{w}` is missing a left-hand term"),
            )),
            Tok::Eof => Err(err(pos, "expected a term, found end of query")),
            other => Err(err(
                pos,
                format!("expected a field term or `(`, found {}", other.describe()),
            )),
        }
    }

    fn close(&mut self, open: Pos) -> Result<(), SyntaxError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            other => Err(err(
                open,
                format!(
                    "unclosed parenthesis (found {} at line {}, column {})",
                    other.describe(),
                    self.pos().line,
                    self.pos().column
                ),
            )),
        }
    }

    fn phrase_list(&mut self, open: Pos) -> Result<Vec<Phrase>, SyntaxError> {
        let mut out = vec![self.phrase(open)?];
        loop {
            self.reject_proximity()?;
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                t if t.is_keyword("OR") => {
                    self.bump();
                }
                _ => break,
            }
            out.push(self.phrase(open)?);
        }
        Ok(out)
    }

    fn phrase(&mut self, open: Pos) -> Result<Phrase, SyntaxError> {
        self.reject_proximity()?;
        let start = self.pos();
        match self.peek().clone() {
            Tok::Quoted(text) => {
                self.bump();
                phrase_from_text(&text).map_err(|m| err(start, m))
            }
            Tok::Word(w) if !matches!(w.as_str(), "AND" | "OR" | "NOT") => {
                let mut words = Vec::new();
                while let Tok::Word(w) = self.peek().clone() {
                    if matches!(w.as_str(), "AND" | "OR" | "NOT") || is_proximity(&w) {
                        break;
                    }
                    words.push(w);
                    self.bump();
                }
                phrase_from_text(&words.join(" ")).map_err(|m| err(start, m))
            }
            Tok::Eof => Err(err(open, "unclosed parenthesis")),
            other => Err(err(
                start,
                format!("expected a phrase, found {}", other.describe()),
            )),
        }
    }
}

/// Normalize raw phrase text into words; `*` is allowed only at the very end.
fn phrase_from_text(text: &str) -> Result<Phrase, String> {
    let trimmed = text.trim();
    let (body, prefix) = match trimmed.strip_suffix('*') {
        Some(b) => (b, true),
        None => (trimmed, false),
    };
    if body.contains('*') {
        return Err(format!(
            "wildcard `*` is only allowed at the end of a phrase: \"{text}\""
        ));
    }
    if prefix && body.ends_with(|c: char| !c.is_alphanumeric()) {
        return Err(format!(
            "wildcard `*` must directly follow a word: \"{text}\""
        ));
    }
    let words = normalize_tokens(body);
    Phrase::new(words, prefix).ok_or_else(|| "empty phrase".to_string())
}

fn collapse(mut items: Vec<QueryAst>, ctor: fn(Vec<QueryAst>) -> QueryAst) -> QueryAst {
    if items.len() == 1 {
        items.pop().expect("one item")
    } else {
        ctor(items)
    }
}

/// Parse query text into an AST. Errors carry the line and column of the
/// offending token (for unclosed parentheses, of the opening parenthesis).
pub fn parse_query(source: &str) -> Result<QueryAst, SyntaxError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, at: 0 };
    if matches!(p.peek(), Tok::Eof) {
        return Err(err(p.pos(), "empty query"));
    }
    let ast = p.or()?;
    match p.peek() {
        Tok::Eof => Ok(ast),
        Tok::RParen => Err(err(p.pos(), "unbalanced `)`")),
        t if t.is_keyword("AND") || t.is_keyword("NOT") => Err(err(p.pos(), "dangling operator")),
        other => Err(err(
            p.pos(),
            format!("expected an operator, found {}", other.describe()),
        )),
    }
}
