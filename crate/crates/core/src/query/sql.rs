//! SQL emission.
//!
//! Emission rules:
//! - The target table holds one row per publication. Each text column stores
//!   the field's normalized tokens joined by single spaces and padded with one
//!   space on both sides (see [`sql_column_text`]); keyword columns separate
//!   keywords with ` | ` ([`sql_keywords_text`]).
//! - A field match becomes `lower(col) LIKE '% w1 w2 %'`. A prefix phrase
//!   drops the trailing space: `'% w1 w2%'`.
//! - `TITLE-ABS-KEY` uses its own column when mapped, otherwise it expands to
//!   an `OR` over the title, abstract and keyword columns.
//! - `And`/`Or` join parenthesized children with ` AND ` / ` OR `;
//!   `AndNot(a, b)` emits `(a) AND NOT (b)`.
//!
//! Only `lower()`, `LIKE` and the boolean operators are used, so the text
//! runs on any engine whose `LIKE` treats `%` as a multi-character wildcard.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::eval::normalize_tokens;
use super::{Field, Phrase, QueryAst};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub table: String,
    pub doi_column: String,
    pub columns: BTreeMap<Field, String>,
}

impl Default for TableSchema {
    fn default() -> Self {
        let columns = [
            (Field::Title, "title"),
            (Field::Abs, "abstract"),
            (Field::AuthKey, "keywords"),
            (Field::SrcTitle, "venue_title"),
        ]
        .into_iter()
        .map(|(f, c)| (f, c.to_string()))
        .collect();
        Self {
            table: "pubs".into(),
            doi_column: "doi".into(),
            columns,
        }
    }
}

impl TableSchema {
    fn column(&self, field: Field) -> Result<&str> {
        self.columns
            .get(&field)
            .map(String::as_str)
            .ok_or_else(|| Error::Transpile(format!("no column mapped for field {field}")))
    }
}

/// Column text for a single-valued field under the emission rules.
pub fn sql_column_text(text: &str) -> String {
    let toks = normalize_tokens(text);
    if toks.is_empty() {
        " ".to_string()
    } else {
        format!(" {} ", toks.join(" "))
    }
}

/// Column text for a keyword list under the emission rules.
pub fn sql_keywords_text(keywords: &[String]) -> String {
    let parts: Vec<String> = keywords
        .iter()
        .map(|k| normalize_tokens(k).join(" "))
        .filter(|k| !k.is_empty())
        .collect();
    if parts.is_empty() {
        " ".to_string()
    } else {
        format!(" {} ", parts.join(" | "))
    }
}

fn like_pattern(phrase: &Phrase) -> String {
    let body = phrase.words().join(" ").replace('\'', "''");
    if phrase.is_prefix() {
        format!("'% {body}%'")
    } else {
        format!("'% {body} %'")
    }
}

fn emit_expr(ast: &QueryAst, schema: &TableSchema, out: &mut String) -> Result<()> {
    match ast {
        QueryAst::And(cs) | QueryAst::Or(cs) => {
            let op = if matches!(ast, QueryAst::And(_)) {
                " AND "
            } else {
                " OR "
            };
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(op);
                }
                out.push('(');
                emit_expr(c, schema, out)?;
                out.push(')');
            }
        }
        QueryAst::AndNot(a, b) => {
            out.push('(');
            emit_expr(a, schema, out)?;
            out.push_str(") AND NOT (");
            emit_expr(b, schema, out)?;
            out.push(')');
        }
        QueryAst::FieldMatch { field, phrase } => {
            let pat = like_pattern(phrase);
            match (field, schema.columns.get(field)) {
                (Field::TitleAbsKey, None) => {
                    let cols = [Field::Title, Field::Abs, Field::AuthKey]
                        .into_iter()
                        .map(|f| schema.column(f))
                        .collect::<Result<Vec<_>>>()?;
                    let parts: Vec<String> = cols
                        .iter()
                        .map(|c| format!("lower({c}) LIKE {pat}"))
                        .collect();
                    out.push('(');
                    out.push_str(&parts.join(" OR "));
                    out.push(')');
                }
                _ => {
                    let col = schema.column(*field)?;
                    out.push_str(&format!("lower({col}) LIKE {pat}"));
                }
            }
        }
    }
    Ok(())
}

/// Transpile a query into a single `SELECT` of the DOI column.
pub fn emit_sql(ast: &QueryAst, schema: &TableSchema) -> Result<String> {
    let mut where_clause = String::new();
    emit_expr(ast, schema, &mut where_clause)?;
    Ok(format!(
        "SELECT {} FROM {} WHERE {}",
        schema.doi_column, schema.table, where_clause
    ))
}
