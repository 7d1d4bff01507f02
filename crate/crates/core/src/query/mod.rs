//! Boolean field-query language for query-based classification.
//!
//! ```text
//! query   := or
//! or      := and ("OR" and)*
//! and     := andnot ("AND" andnot)*
//! andnot  := primary ("AND NOT" primary)*
//! primary := "(" query ")" | FIELD "(" phrases ")"
//! phrases := phrase (("," | "OR") phrase)*
//! phrase  := "\"" text "\"" | bare-word+
//! FIELD   := TITLE | ABS | AUTHKEY | TITLE-ABS-KEY | TITLE_ABS_KEY | SRCTITLE
//! ```
//!
//! Operators are uppercase keywords. `AND NOT` binds tighter than `AND`,
//! which binds tighter than `OR`; all are left-associative. A phrase list
//! inside one field term becomes an `Or` over per-phrase field matches.
//! A trailing `*` on the final word of a phrase is a prefix wildcard.
//! Proximity operators (`W/n`, `PRE/n`) are rejected.

mod eval;
mod parse;
mod sql;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use eval::{eval_query, normalize_tokens, MatchDoc};
pub use parse::{parse_query, SyntaxError};
pub use sql::{emit_sql, sql_column_text, sql_keywords_text, TableSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Field {
    Title,
    Abs,
    AuthKey,
    TitleAbsKey,
    SrcTitle,
}

impl Field {
    pub const ALL: [Field; 5] = [
        Field::Title,
        Field::Abs,
        Field::AuthKey,
        Field::TitleAbsKey,
        Field::SrcTitle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Title => "TITLE",
            Field::Abs => "ABS",
            Field::AuthKey => "AUTHKEY",
            Field::TitleAbsKey => "TITLE-ABS-KEY",
            Field::SrcTitle => "SRCTITLE",
        }
    }

    pub fn from_name(s: &str) -> Option<Field> {
        match s.to_ascii_uppercase().as_str() {
            "TITLE" => Some(Field::Title),
            "ABS" => Some(Field::Abs),
            "AUTHKEY" => Some(Field::AuthKey),
            "TITLE-ABS-KEY" | "TITLE_ABS_KEY" => Some(Field::TitleAbsKey),
            "SRCTITLE" => Some(Field::SrcTitle),
            _ => None,
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A normalized search phrase: ASCII-lowercased alphanumeric words, the last
/// of which may be a prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phrase {
    words: Vec<String>,
    prefix: bool,
}

impl Phrase {
    /// Build from already-normalized words. Returns `None` for an empty list
    /// or a word that is not a single normalized token.
    pub fn new(words: Vec<String>, prefix: bool) -> Option<Self> {
        if words.is_empty() {
            return None;
        }
        for w in &words {
            let toks = normalize_tokens(w);
            if toks.len() != 1 || &toks[0] != w {
                return None;
            }
        }
        Some(Self { words, prefix })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn is_prefix(&self) -> bool {
        self.prefix
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words.join(" "))?;
        if self.prefix {
            f.write_str("*")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryAst {
    /// Two or more children.
    And(Vec<QueryAst>),
    /// Two or more children.
    Or(Vec<QueryAst>),
    /// Left and not right.
    AndNot(Box<QueryAst>, Box<QueryAst>),
    FieldMatch {
        field: Field,
        phrase: Phrase,
    },
}

impl QueryAst {
    pub fn field(field: Field, phrase: Phrase) -> Self {
        QueryAst::FieldMatch { field, phrase }
    }

    pub fn and_not(a: QueryAst, b: QueryAst) -> Self {
        QueryAst::AndNot(Box::new(a), Box::new(b))
    }

    /// Fields referenced anywhere in the tree.
    pub fn fields(&self) -> Vec<Field> {
        let mut out = Vec::new();
        self.visit_fields(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn visit_fields(&self, out: &mut Vec<Field>) {
        match self {
            QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().for_each(|c| c.visit_fields(out)),
            QueryAst::AndNot(a, b) => {
                a.visit_fields(out);
                b.visit_fields(out);
            }
            QueryAst::FieldMatch { field, .. } => out.push(*field),
        }
    }

    /// Checks the arity rules of boolean nodes.
    pub fn is_well_formed(&self) -> bool {
        match self {
            QueryAst::And(cs) | QueryAst::Or(cs) => {
                cs.len() >= 2 && cs.iter().all(QueryAst::is_well_formed)
            }
            QueryAst::AndNot(a, b) => a.is_well_formed() && b.is_well_formed(),
            QueryAst::FieldMatch { .. } => true,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::FieldMatch { .. } => write!(f, "{self}"),
            _ => write!(f, "({self})"),
        }
    }
}

/// Pretty-printing yields text that parses back to the same tree.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAst::And(cs) | QueryAst::Or(cs) => {
                let op = if matches!(self, QueryAst::And(_)) {
                    " AND "
                } else {
                    " OR "
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    c.fmt_child(f)?;
                }
                Ok(())
            }
            QueryAst::AndNot(a, b) => {
                a.fmt_child(f)?;
                f.write_str(" AND NOT ")?;
                b.fmt_child(f)
            }
            QueryAst::FieldMatch { field, phrase } => write!(f, "{field}(\"{phrase}\")"),
        }
    }
}
