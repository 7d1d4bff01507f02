//! Noun phrases from model responses and the set algebra across sources.
//!
//! A phrase is a maximal `DET? ADJ* NOUN+` run with the determiner dropped.
//! Per strategy, a phrase counts once per response containing it and is
//! kept when that count exceeds `floor(fraction * N)` for `N` responses.
//! Surviving phrases of all strategies are then summed into one table per
//! (SDG, source).

mod tagger;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use tagger::{lexicon_size, lexicon_tag, pos_tag, suffix_tag, tag_word, Tag};

use crate::classify::Sdg;
use crate::error::{Error, Result};
use crate::lm::tokenize;

/// Maximal `DET? ADJ* NOUN+` matches, scanning left to right.
pub fn extract_noun_phrases<S: AsRef<str>>(tokens: &[S], tags: &[Tag]) -> Vec<String> {
    assert_eq!(tokens.len(), tags.len(), "one tag per token");
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let mut j = i;
        if tags[j] == Tag::Det {
            j += 1;
        }
        let start = j;
        while j < tags.len() && tags[j] == Tag::Adj {
            j += 1;
        }
        let nouns = j;
        while j < tags.len() && tags[j] == Tag::Noun {
            j += 1;
        }
        if j > nouns {
            let words: Vec<String> = tokens[start..j]
                .iter()
                .map(|t| t.as_ref().to_lowercase())
                .collect();
            out.push(words.join(" "));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Tokenize, tag and extract.
pub fn phrases_in(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let tags = pos_tag(&tokens);
    extract_noun_phrases(&tokens, &tags)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Number of responses containing the phrase.
    #[default]
    Response,
    /// Total occurrences over all responses.
    Occurrence,
}

pub fn phrase_counts<S: AsRef<str>>(responses: &[S], mode: CountMode) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in responses {
        let phrases = phrases_in(r.as_ref());
        match mode {
            CountMode::Response => {
                for p in phrases.into_iter().collect::<BTreeSet<_>>() {
                    *counts.entry(p).or_default() += 1;
                }
            }
            CountMode::Occurrence => {
                for p in phrases {
                    *counts.entry(p).or_default() += 1;
                }
            }
        }
    }
    counts
}

/// `floor(fraction * n)`, robust to the representation error in products
/// like `0.1 * 500`.
pub fn threshold_cutoff(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Phrases whose count exceeds the cutoff for `n` responses.
pub fn threshold_filter(
    counts: &BTreeMap<String, usize>,
    n: usize,
    fraction: f64,
) -> Result<BTreeMap<String, usize>> {
    if n == 0 {
        return Err(Error::Config(
            "threshold needs at least one response".into(),
        ));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!(
            "threshold fraction {fraction} outside [0, 1]"
        )));
    }
    let cut = threshold_cutoff(n, fraction);
    Ok(counts
        .iter()
        .filter(|(_, &c)| c > cut)
        .map(|(p, &c)| (p.clone(), c))
        .collect())
}

/// Thresholded phrases of one strategy's response set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyPhrases {
    pub strategy: String,
    pub responses: usize,
    pub counts: BTreeMap<String, usize>,
}

pub fn strategy_phrases<S: AsRef<str>>(
    strategy: &str,
    responses: &[S],
    fraction: f64,
    mode: CountMode,
) -> Result<StrategyPhrases> {
    let counts = phrase_counts(responses, mode);
    Ok(StrategyPhrases {
        strategy: strategy.to_string(),
        responses: responses.len(),
        counts: threshold_filter(&counts, responses.len(), fraction)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTable {
    pub sdg: Sdg,
    pub source_id: String,
    /// Strategy names in column order.
    pub strategies: Vec<String>,
    /// Aggregated count per phrase.
    pub entries: BTreeMap<String, usize>,
    /// Per phrase, the count in each strategy where it survived.
    pub per_strategy: BTreeMap<String, BTreeMap<String, usize>>,
}

impl PhraseTable {
    pub fn phrases(&self) -> BTreeSet<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn file_name(&self) -> String {
        format!("sdg{}.{}.csv", self.sdg.get(), self.source_id)
    }

    /// `phrase,count,<strategy>...`, sorted by count descending then phrase.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phrase,count");
        for s in &self.strategies {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (phrase, count) in sorted_desc(&self.entries) {
            let _ = write!(out, "{phrase},{count}");
            for s in &self.strategies {
                let c = self.per_strategy[phrase].get(s).copied().unwrap_or(0);
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(sdg: Sdg, source_id: &str, text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "phrase" || &headers[1] != "count" {
            return Err(Error::Schema(
                "phrase table header must start phrase,count".into(),
            ));
        }
        let strategies: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut table = PhraseTable {
            sdg,
            source_id: source_id.to_string(),
            strategies: strategies.clone(),
            entries: BTreeMap::new(),
            per_strategy: BTreeMap::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<usize> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Schema(format!("bad count {:?}", &rec[i])))
            };
            let phrase = rec[0].to_string();
            table.entries.insert(phrase.clone(), num(1)?);
            let mut per = BTreeMap::new();
            for (i, s) in strategies.iter().enumerate() {
                let c = num(i + 2)?;
                if c > 0 {
                    per.insert(s.clone(), c);
                }
            }
            table.per_strategy.insert(phrase, per);
        }
        Ok(table)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// `(phrase, count)` by descending count, ties by phrase.
pub fn sorted_desc(counts: &BTreeMap<String, usize>) -> Vec<(&String, usize)> {
    let mut v: Vec<(&String, usize)> = counts.iter().map(|(p, &c)| (p, c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

/// Union of the strategy sets; counts summed over strategies where a phrase
/// survived.
pub fn aggregate_strategies(
    sdg: Sdg,
    source_id: &str,
    sets: &[StrategyPhrases],
) -> Result<PhraseTable> {
    let mut seen = BTreeSet::new();
    for s in sets {
        if !seen.insert(&s.strategy) {
            return Err(Error::Config(format!(
                "strategy {} aggregated twice",
                s.strategy
            )));
        }
    }
    let mut entries: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_strategy: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for set in sets {
        for (phrase, &c) in &set.counts {
            *entries.entry(phrase.clone()).or_default() += c;
            per_strategy
                .entry(phrase.clone())
                .or_default()
                .insert(set.strategy.clone(), c);
        }
    }
    Ok(PhraseTable {
        sdg,
        source_id: source_id.to_string(),
        strategies: sets.iter().map(|s| s.strategy.clone()).collect(),
        entries,
        per_strategy,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonUniqueSets {
    pub sdg: Sdg,
    pub sources: Vec<String>,
    pub common: BTreeSet<String>,
    /// Table phrases minus the common set. Phrases shared by some but not
    /// all sources stay in each of their unique sets.
    pub unique: BTreeMap<String, BTreeSet<String>>,
}

pub fn common_unique_sets(tables: &[&PhraseTable]) -> Result<CommonUniqueSets> {
    if tables.len() < 2 {
        return Err(Error::Config(
            "common/unique sets need at least two tables".into(),
        ));
    }
    let sdg = tables[0].sdg;
    if tables.iter().any(|t| t.sdg != sdg) {
        return Err(Error::Config("phrase tables of different SDGs".into()));
    }
    let mut common = tables[0].phrases();
    for t in &tables[1..] {
        common.retain(|p| t.entries.contains_key(p));
    }
    let unique = tables
        .iter()
        .map(|t| {
            let u = t.phrases().difference(&common).cloned().collect();
            (t.source_id.clone(), u)
        })
        .collect();
    Ok(CommonUniqueSets {
        sdg,
        sources: tables.iter().map(|t| t.source_id.clone()).collect(),
        common,
        unique,
    })
}

impl CommonUniqueSets {
    /// Common phrases with their summed count over sources.
    pub fn common_counts(&self, tables: &[&PhraseTable]) -> BTreeMap<String, usize> {
        self.common
            .iter()
            .map(|p| (p.clone(), tables.iter().map(|t| t.entries[p]).sum()))
            .collect()
    }

    /// `phrase,total,<source>...`, sorted by total descending.
    pub fn common_csv(&self, tables: &[&PhraseTable]) -> String {
        let mut out = String::from("phrase,total");
        for t in tables {
            out.push(',');
            out.push_str(&t.source_id);
        }
        out.push('\n');
        for (phrase, total) in sorted_desc(&self.common_counts(tables)) {
            let _ = write!(out, "{phrase},{total}");
            for t in tables {
                let _ = write!(out, ",{}", t.entries[phrase]);
            }
            out.push('\n');
        }
        out
    }

    /// A source's unique phrases with their counts in its own table.
    pub fn unique_counts(&self, table: &PhraseTable) -> BTreeMap<String, usize> {
        self.unique
            .get(&table.source_id)
            .into_iter()
            .flatten()
            .map(|p| (p.clone(), table.entries[p]))
            .collect()
    }

    pub fn common_file_name(&self) -> String {
        format!("sdg{}.common.csv", self.sdg.get())
    }
}
