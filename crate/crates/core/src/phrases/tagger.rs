use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Adj,
    Det,
    Verb,
    Other,
}

impl Tag {
    pub fn letter(self) -> char {
        match self {
            Tag::Noun => 'N',
            Tag::Adj => 'A',
            Tag::Det => 'D',
            Tag::Verb => 'V',
            Tag::Other => 'O',
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "NOUN" => Tag::Noun,
            "ADJ" => Tag::Adj,
            "DET" => Tag::Det,
            "VERB" => Tag::Verb,
            "OTHER" => Tag::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Noun => "NOUN",
            Tag::Adj => "ADJ",
            Tag::Det => "DET",
            Tag::Verb => "VERB",
            Tag::Other => "OTHER",
        })
    }
}

const LEXICON: &str = include_str!("lexicon.txt");

fn lexicon() -> &'static HashMap<&'static str, Tag> {
    static MAP: OnceLock<HashMap<&'static str, Tag>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in LEXICON.lines() {
            let line = line.split('#').next().unwrap_or_default();
            let mut words = line.split_whitespace();
            let Some(tag) = words.next() else { continue };
            let tag = Tag::parse(tag).unwrap_or_else(|| panic!("bad lexicon tag {tag}"));
            for w in words {
                map.entry(w).or_insert(tag);
            }
        }
        map
    })
}

/// Number of bundled lexicon entries.
pub fn lexicon_size() -> usize {
    lexicon().len()
}

pub fn lexicon_tag(word: &str) -> Option<Tag> {
    lexicon().get(word).copied()
}

// Longest suffix first.
const SUFFIXES: &[(&str, Tag)] = &[
    ("nesses", Tag::Noun),
    ("ations", Tag::Noun),
    ("ments", Tag::Noun),
    ("ities", Tag::Noun),
    ("tions", Tag::Noun),
    ("sions", Tag::Noun),
    ("ships", Tag::Noun),
    ("ation", Tag::Noun),
    ("ness", Tag::Noun),
    ("ment", Tag::Noun),
    ("tion", Tag::Noun),
    ("sion", Tag::Noun),
    ("ship", Tag::Noun),
    ("ance", Tag::Noun),
    ("ence", Tag::Noun),
    ("isms", Tag::Noun),
    ("ists", Tag::Noun),
    ("hood", Tag::Noun),
    ("able", Tag::Adj),
    ("ible", Tag::Adj),
    ("ious", Tag::Adj),
    ("less", Tag::Adj),
    ("ical", Tag::Adj),
    ("ity", Tag::Noun),
    ("ism", Tag::Noun),
    ("ist", Tag::Noun),
    ("ous", Tag::Adj),
    ("ive", Tag::Adj),
    ("ful", Tag::Adj),
    ("ary", Tag::Adj),
    ("ize", Tag::Verb),
    ("ise", Tag::Verb),
    ("ing", Tag::Verb),
    ("ate", Tag::Verb),
    ("al", Tag::Adj),
    ("ic", Tag::Adj),
    ("ed", Tag::Verb),
];

/// Shortest stem a suffix rule needs in front of it.
const MIN_STEM: usize = 3;

pub fn suffix_tag(word: &str) -> Option<Tag> {
    SUFFIXES.iter().find_map(|&(suf, tag)| {
        (word.len() >= suf.len() + MIN_STEM && word.ends_with(suf)).then_some(tag)
    })
}

/// Lexicon, then suffix rules, then `Other`. Non-alphabetic tokens are
/// always `Other`.
pub fn tag_word(word: &str) -> Tag {
    if !word.chars().any(char::is_alphabetic) {
        return Tag::Other;
    }
    lexicon_tag(word)
        .or_else(|| suffix_tag(word))
        .unwrap_or(Tag::Other)
}

pub fn pos_tag<S: AsRef<str>>(tokens: &[S]) -> Vec<Tag> {
    tokens.iter().map(|t| tag_word(t.as_ref())).collect()
}
