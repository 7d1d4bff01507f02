use crate::corpus::PublicationRecord;

use super::{Field, Phrase, QueryAst};

/// Split text into maximal runs of alphanumeric characters, ASCII-lowercased.
/// Non-ASCII letters are kept as-is.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// A record pre-tokenized for matching. Keywords stay separate so a phrase
/// never spans two keywords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchDoc {
    pub title: Vec<String>,
    pub abstract_tokens: Vec<String>,
    pub keywords: Vec<Vec<String>>,
    pub venue: Vec<String>,
}

impl MatchDoc {
    pub fn new(title: &str, abstract_text: &str, keywords: &[String], venue_title: &str) -> Self {
        Self {
            title: normalize_tokens(title),
            abstract_tokens: normalize_tokens(abstract_text),
            keywords: keywords.iter().map(|k| normalize_tokens(k)).collect(),
            venue: normalize_tokens(venue_title),
        }
    }

    pub fn from_record(r: &PublicationRecord) -> Self {
        Self::new(&r.title, &r.abstract_text, &r.keywords, &r.venue_title)
    }

    pub fn matches(&self, field: Field, phrase: &Phrase) -> bool {
        match field {
            Field::Title => contains_phrase(&self.title, phrase),
            Field::Abs => contains_phrase(&self.abstract_tokens, phrase),
            Field::AuthKey => self.keywords.iter().any(|k| contains_phrase(k, phrase)),
            Field::SrcTitle => contains_phrase(&self.venue, phrase),
            Field::TitleAbsKey => {
                self.matches(Field::Title, phrase)
                    || self.matches(Field::Abs, phrase)
                    || self.matches(Field::AuthKey, phrase)
            }
        }
    }

    pub fn eval(&self, ast: &QueryAst) -> bool {
        match ast {
            QueryAst::And(cs) => cs.iter().all(|c| self.eval(c)),
            QueryAst::Or(cs) => cs.iter().any(|c| self.eval(c)),
            QueryAst::AndNot(a, b) => self.eval(a) && !self.eval(b),
            QueryAst::FieldMatch { field, phrase } => self.matches(*field, phrase),
        }
    }
}

fn contains_phrase(tokens: &[String], phrase: &Phrase) -> bool {
    let words = phrase.words();
    let m = words.len();
    if tokens.len() < m {
        return false;
    }
    let last = m - 1;
    tokens.windows(m).any(|win| {
        win.iter().zip(words).enumerate().all(|(i, (tok, w))| {
            if i == last && phrase.is_prefix() {
                tok.starts_with(w.as_str())
            } else {
                tok == w
            }
        })
    })
}

/// Evaluate a query against one record.
pub fn eval_query(ast: &QueryAst, record: &PublicationRecord) -> bool {
    MatchDoc::from_record(record).eval(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn abs(text: &str) -> MatchDoc {
        MatchDoc::new("", text, &[], "")
    }

    #[test]
    fn tokenization() {
        assert_eq!(
            normalize_tokens("COVID-19, Économie!"),
            vec!["covid", "19", "Économie"]
        );
    }

    #[test]
    fn word_boundary_matching() {
        let q = parse_query(r#"ABS("economic growth")"#).unwrap();
        assert!(abs("Drivers of economic growth in...").eval(&q));
        let q = parse_query("ABS(growth)").unwrap();
        assert!(!abs("outgrowth of policy").eval(&q));
        assert!(abs("Growth!").eval(&q));
    }

    #[test]
    fn prefix_wildcard() {
        let q = parse_query("AUTHKEY(inequalit*)").unwrap();
        let doc = MatchDoc::new("", "", &["Income inequality".into()], "");
        assert!(doc.eval(&q));
        let doc = MatchDoc::new("", "inequalit", &[], "");
        assert!(!doc.eval(&q));
    }

    #[test]
    fn phrase_does_not_span_keywords() {
        let q = parse_query(r#"AUTHKEY("gender equality")"#).unwrap();
        let split = MatchDoc::new("", "", &["gender".into(), "equality".into()], "");
        assert!(!split.eval(&q));
        let joined = MatchDoc::new("", "", &["Gender Equality".into()], "");
        assert!(joined.eval(&q));
    }

    #[test]
    fn title_abs_key_is_union() {
        let q = parse_query("TITLE-ABS-KEY(poverty)").unwrap();
        assert!(MatchDoc::new("Poverty", "", &[], "").eval(&q));
        assert!(MatchDoc::new("", "", &["poverty".into()], "").eval(&q));
        assert!(!MatchDoc::new("", "", &[], "poverty journal").eval(&q));
        let q = parse_query("SRCTITLE(journal)").unwrap();
        assert!(MatchDoc::new("", "", &[], "poverty journal").eval(&q));
    }

    #[test]
    fn boolean_identities() {
        let q = parse_query("ABS(a)").unwrap();
        let self_not = QueryAst::and_not(q.clone(), q.clone());
        let self_or = QueryAst::Or(vec![q.clone(), q.clone()]);
        for text in ["a", "b", "a b", ""] {
            let d = abs(text);
            assert!(!d.eval(&self_not));
            assert_eq!(d.eval(&self_or), d.eval(&q));
        }
    }
}
