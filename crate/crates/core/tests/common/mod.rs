//! Fixture generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sdgdiv_core::corpus::{
    normalize_doi, DocType, Doi, JoinConfig, PublicationRecord, SourceStore, VenueType,
};
use sdgdiv_core::lm::{LmConfig, NgramModel, Smoothing};
use sdgdiv_core::query::{Field, Phrase, QueryAst};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- joint index ----

pub fn record(doi: &str, rng: &mut impl Rng) -> PublicationRecord {
    let year = if rng.gen_bool(0.9) {
        rng.gen_range(2015..=2023)
    } else {
        *[2009, 2014, 2024, 2026].choose(rng).unwrap()
    };
    let doc_type = match rng.gen_range(0..20) {
        0 => DocType::Other,
        1..=4 => DocType::Review,
        _ => DocType::Article,
    };
    let venue_type = if rng.gen_bool(0.95) {
        VenueType::Journal
    } else {
        VenueType::Other
    };
    PublicationRecord {
        doi: normalize_doi(doi).unwrap(),
        title: "t".into(),
        abstract_text: if rng.gen_bool(0.96) {
            "a".into()
        } else {
            String::new()
        },
        keywords: vec![],
        venue_title: "v".into(),
        year,
        doc_type,
        venue_type,
        source_id: String::new(),
    }
}

/// `sources` stores over a pool of `pool` DOIs. Each source lists a DOI with
/// probability 0.85 and duplicates it with probability 0.03.
pub fn random_stores(rng: &mut impl Rng, sources: usize, pool: usize) -> Vec<SourceStore> {
    (0..sources)
        .map(|s| {
            let mut recs = Vec::new();
            for i in 0..pool {
                if !rng.gen_bool(0.85) {
                    continue;
                }
                let doi = format!("10.{}/x{i}", 1000 + i % 7);
                recs.push(record(&doi, rng));
                if rng.gen_bool(0.03) {
                    recs.push(record(&doi, rng));
                }
            }
            SourceStore::from_records(format!("s{s}"), recs)
        })
        .collect()
}

fn passes(r: &PublicationRecord, cfg: &JoinConfig) -> bool {
    r.year >= cfg.year_window.0
        && r.year <= cfg.year_window.1
        && matches!(r.doc_type, DocType::Article | DocType::Review)
        && r.venue_type == VenueType::Journal
        && !r.abstract_text.trim().is_empty()
}

/// Straight-line restatement of the join rules.
pub fn oracle_join(
    stores: &[SourceStore],
    cfg: &JoinConfig,
) -> BTreeMap<Doi, Vec<PublicationRecord>> {
    let per_source: Vec<HashMap<&Doi, &PublicationRecord>> = stores
        .iter()
        .map(|s| {
            let mut mult: HashMap<&Doi, usize> = HashMap::new();
            for r in s.records() {
                *mult.entry(&r.doi).or_default() += 1;
            }
            s.records()
                .iter()
                .filter(|r| !cfg.require_unique || mult[&r.doi] == 1)
                .filter(|r| passes(r, cfg))
                .map(|r| (&r.doi, r))
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for doi in per_source[0].keys() {
        if per_source.iter().all(|m| m.contains_key(doi)) {
            out.insert(
                (*doi).clone(),
                per_source.iter().map(|m| m[doi].clone()).collect(),
            );
        }
    }
    out
}

// ---- query engine ----

pub const WORDS: [&str; 12] = [
    "gender",
    "equality",
    "women",
    "school",
    "education",
    "poverty",
    "water",
    "energy",
    "policy",
    "health",
    "labour",
    "rights",
];

fn words(rng: &mut impl Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n)
        .map(|_| {
            let w = *WORDS.choose(rng).unwrap();
            // Vary case and punctuation; normalization must see through both.
            match rng.gen_range(0..6) {
                0 => w.to_uppercase(),
                1 => format!("{w},"),
                2 => format!("({w})"),
                _ => w.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn query_record(i: usize, rng: &mut impl Rng) -> PublicationRecord {
    let mut r = record(&format!("10.1/q{i}"), rng);
    r.title = words(rng, 2, 6);
    r.abstract_text = words(rng, 6, 20);
    r.keywords = (0..rng.gen_range(0..4)).map(|_| words(rng, 1, 2)).collect();
    r.venue_title = words(rng, 1, 3);
    r
}

fn random_phrase(rng: &mut impl Rng) -> Phrase {
    let n = if rng.gen_bool(0.7) { 1 } else { 2 };
    let mut ws: Vec<String> = (0..n)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    let prefix = rng.gen_bool(0.2);
    if prefix {
        let last = ws.last_mut().unwrap();
        let cut = rng.gen_range(1..=last.len());
        last.truncate(cut);
    }
    Phrase::new(ws, prefix).unwrap()
}

pub fn random_ast(rng: &mut impl Rng, depth: u32) -> QueryAst {
    if depth == 0 || rng.gen_bool(0.3) {
        let field = *Field::ALL.choose(rng).unwrap();
        return QueryAst::field(field, random_phrase(rng));
    }
    match rng.gen_range(0..3) {
        0 => QueryAst::And(
            (0..rng.gen_range(2..=3))
                .map(|_| random_ast(rng, depth - 1))
                .collect(),
        ),
        1 => QueryAst::Or(
            (0..rng.gen_range(2..=3))
                .map(|_| random_ast(rng, depth - 1))
                .collect(),
        ),
        _ => QueryAst::and_not(random_ast(rng, depth - 1), random_ast(rng, depth - 1)),
    }
}

/// Space-padded lowercase text, one token per alphanumeric run.
fn padded(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                ' '
            }
        })
        .collect();
    format!(
        " {} ",
        cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
    )
}

fn text_has(text: &str, p: &Phrase) -> bool {
    let body = p.words().join(" ");
    if p.is_prefix() {
        padded(text).contains(&format!(" {body}"))
    } else {
        padded(text).contains(&format!(" {body} "))
    }
}

/// Substring scan over padded field text.
pub fn naive_eval(ast: &QueryAst, r: &PublicationRecord) -> bool {
    match ast {
        QueryAst::And(cs) => cs.iter().all(|c| naive_eval(c, r)),
        QueryAst::Or(cs) => cs.iter().any(|c| naive_eval(c, r)),
        QueryAst::AndNot(a, b) => naive_eval(a, r) && !naive_eval(b, r),
        QueryAst::FieldMatch { field, phrase } => {
            let title = text_has(&r.title, phrase);
            let abs = text_has(&r.abstract_text, phrase);
            let key = r.keywords.iter().any(|k| text_has(k, phrase));
            match field {
                Field::Title => title,
                Field::Abs => abs,
                Field::AuthKey => key,
                Field::SrcTitle => text_has(&r.venue_title, phrase),
                Field::TitleAbsKey => title || abs || key,
            }
        }
    }
}

// ---- overlap ----

/// Region counts from each element's membership mask.
pub fn membership_histogram(sets: &[Vec<u32>]) -> (BTreeMap<u32, usize>, usize) {
    let mut mask: HashMap<u32, u32> = HashMap::new();
    for (i, s) in sets.iter().enumerate() {
        for &x in s {
            *mask.entry(x).or_default() |= 1 << i;
        }
    }
    let mut hist = BTreeMap::new();
    for m in mask.values() {
        *hist.entry(*m).or_default() += 1;
    }
    (hist, mask.len())
}

pub fn random_set(rng: &mut impl Rng, universe: u32, density: f64) -> Vec<u32> {
    let set: BTreeSet<u32> = (0..universe).filter(|_| rng.gen_bool(density)).collect();
    set.into_iter().collect()
}

// ---- language models ----

/// A small random corpus over a vocabulary of `v` words.
pub fn random_corpus(rng: &mut impl Rng, v: usize) -> Vec<String> {
    let vocab: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
    (0..rng.gen_range(3..20))
        .map(|_| {
            (0..rng.gen_range(1..15))
                .map(|_| vocab.choose(rng).unwrap().as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn random_model(rng: &mut impl Rng) -> NgramModel {
    let v = rng.gen_range(2..30);
    let corpus = random_corpus(rng, v);
    let smoothing = match rng.gen_range(0..3) {
        0 => Smoothing::AddK { k: 0.0 },
        1 => Smoothing::AddK {
            k: rng.gen_range(0.001..2.0),
        },
        _ => Smoothing::KneserNey {
            discount: rng.gen_range(0.05..=1.0),
        },
    };
    let cfg = LmConfig {
        order: rng.gen_range(1..=4),
        smoothing,
        rep_dim: 8,
        ..LmConfig::default()
    };
    NgramModel::train(&corpus, &cfg).unwrap()
}

/// Chi-square statistic of observed counts against expected probabilities.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}
