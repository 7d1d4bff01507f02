//! Synthetic three-source corpora with known ground truth.
//!
//! Per SDG, "core" publications are classified by every source and their
//! abstracts use a shared term list. Two further groups are classified by
//! one source each (the first via labels, the second via scores) and use
//! that source's exclusive term list. The third source classifies by query
//! and sees only the core group. Every source also carries records that the
//! join must drop: duplicates, out-of-window years, wrong document or venue
//! types, missing abstracts and DOIs the other sources lack.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classify::Sdg;
use crate::decoding::Strategy;
use crate::error::{Error, Result};

/// Source ids in generation order: labels, scores, query.
pub const SOURCES: [&str; 3] = ["wos", "openalex", "scopus"];

struct Terms {
    sdg: u8,
    shared: [&'static str; 8],
    first: [&'static str; 4],
    second: [&'static str; 4],
}

const TERMS: [Terms; 5] = [
    Terms {
        sdg: 4,
        shared: [
            "education",
            "school",
            "student",
            "teacher",
            "literacy",
            "curriculum",
            "classroom",
            "pupil",
        ],
        first: ["scholarship", "textbook", "campus", "pedagogy"],
        second: ["enrolment", "attendance", "dropout", "fees"],
    },
    Terms {
        sdg: 5,
        shared: [
            "gender",
            "equality",
            "women",
            "girls",
            "empowerment",
            "violence",
            "discrimination",
            "leadership",
        ],
        first: ["harassment", "dowry", "marriage", "maternity"],
        second: ["childcare", "paternity", "quota", "representation"],
    },
    Terms {
        sdg: 8,
        shared: [
            "employment",
            "wage",
            "labour",
            "worker",
            "productivity",
            "income",
            "job",
            "entrepreneurship",
        ],
        first: ["apprenticeship", "internship", "pension", "unemployment"],
        second: ["remittance", "microfinance", "tourism", "workforce"],
    },
    Terms {
        sdg: 9,
        shared: [
            "infrastructure",
            "innovation",
            "industry",
            "technology",
            "manufacturing",
            "research",
            "broadband",
            "connectivity",
        ],
        first: ["robot", "automation", "patent", "startup"],
        second: ["highway", "bridge", "port", "logistics"],
    },
    Terms {
        sdg: 10,
        shared: [
            "inequality",
            "migration",
            "inclusion",
            "poverty",
            "refugee",
            "minority",
            "welfare",
            "disability",
        ],
        first: ["subsidy", "grant", "transfer", "caste"],
        second: ["ethnicity", "elite", "exclusion", "mobility"],
    },
];

/// Sentence frames; `{}` slots take one term each. Frame words are chosen
/// so that only slot terms form noun phrases.
const FRAMES: [&str; 5] = [
    "it is shown that {} is linked to {} .",
    "we find that {} depends on {} and {} .",
    "{} remains linked to {} , while {} is often examined .",
    "where {} has been examined , {} and {} are linked .",
    "because of {} , {} is strongly linked to {} .",
];

const PROMPTS: [&str; 6] = [
    "it is shown that",
    "we find that",
    "because of",
    "where",
    "it is shown that {} is linked to",
    "we find that {} depends on",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Subset of 4, 5, 8, 9, 10.
    pub sdgs: Vec<u8>,
    /// Core publications per SDG.
    pub core_docs: usize,
    /// Publications per SDG classified by exactly one source.
    pub exclusive_docs: usize,
    /// Records per source that the join must drop.
    pub noise_docs: usize,
    pub prompts_per_sdg: usize,
    pub max_tokens: usize,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub run_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            sdgs: vec![4, 5, 8, 9, 10],
            core_docs: 60,
            exclusive_docs: 40,
            noise_docs: 30,
            prompts_per_sdg: 20,
            max_tokens: 40,
            strategies: Strategy::defaults(),
            seed: 1,
            run_seed: 42,
        }
    }
}

/// Ground truth for a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Planted {
    /// Terms of the core group, per SDG.
    pub shared: BTreeMap<Sdg, Vec<String>>,
    /// Per SDG, the exclusive terms of each source that has any.
    pub exclusive: BTreeMap<Sdg, BTreeMap<String, Vec<String>>>,
    /// Publications per SDG in the core and exclusive groups.
    pub core_docs: usize,
    pub exclusive_docs: usize,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub config_path: PathBuf,
    pub planted: Planted,
}

fn terms_for(sdg: u8) -> Result<&'static Terms> {
    TERMS
        .iter()
        .find(|t| t.sdg == sdg)
        .ok_or_else(|| Error::Config(format!("no synthetic vocabulary for SDG {sdg}")))
}

fn abstract_text(rng: &mut ChaCha8Rng, terms: &[&str]) -> String {
    let mut sentences = Vec::new();
    for _ in 0..3 {
        let frame = FRAMES.choose(rng).expect("frames");
        let mut s = String::new();
        for (i, part) in frame.split("{}").enumerate() {
            if i > 0 {
                s.push_str(terms.choose(rng).expect("terms"));
            }
            s.push_str(part);
        }
        sentences.push(s);
    }
    sentences.join(" ")
}

#[derive(Clone)]
struct Doc {
    key: String,
    year: i32,
    doc_type: &'static str,
    venue_type: &'static str,
    title: String,
    abstract_text: String,
    keywords: Vec<String>,
    /// Sources that list this DOI; noise records may be missing elsewhere.
    in_sources: [bool; 3],
    duplicated_in: Option<usize>,
}

/// DOI spelling as each source writes it.
fn doi_as(key: &str, source: usize) -> String {
    match source {
        0 => format!("10.5555/{key}"),
        1 => format!("https://doi.org/10.5555/{}", key.to_uppercase()),
        _ => format!("doi:10.5555/{key}"),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write a corpus, classification inputs, prompts and `run.toml` into `dir`.
pub fn write_synthetic(dir: &Path, spec: &SynthSpec) -> Result<SynthCorpus> {
    std::fs::create_dir_all(dir.join("data/queries")).map_err(|e| Error::io(dir, e))?;
    std::fs::create_dir_all(dir.join("prompts")).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs: Vec<Doc> = Vec::new();
    let mut labels = String::from("doi,sdg\n");
    let mut scores = String::from("doi,sdg,score\n");
    let mut planted = Planted {
        shared: BTreeMap::new(),
        exclusive: BTreeMap::new(),
        core_docs: spec.core_docs,
        exclusive_docs: spec.exclusive_docs,
    };

    for &k in &spec.sdgs {
        let t = terms_for(k)?;
        let sdg = Sdg::new(k)?;
        planted
            .shared
            .insert(sdg, t.shared.iter().map(|s| s.to_string()).collect());
        planted.exclusive.insert(
            sdg,
            [
                (
                    SOURCES[0].to_string(),
                    t.first.iter().map(|s| s.to_string()).collect(),
                ),
                (
                    SOURCES[1].to_string(),
                    t.second.iter().map(|s| s.to_string()).collect(),
                ),
            ]
            .into_iter()
            .collect(),
        );
        let groups: [(&str, &[&str], usize); 3] = [
            ("core", &t.shared, spec.core_docs),
            ("first", &t.first, spec.exclusive_docs),
            ("second", &t.second, spec.exclusive_docs),
        ];
        for (group, terms, n) in groups {
            for i in 0..n {
                let key = format!("syn.{k}.{group}.{i:04}");
                let keyword = if group == "core" {
                    format!("SDG {k}")
                } else {
                    format!("goal {k}")
                };
                docs.push(Doc {
                    key: key.clone(),
                    year: rng.gen_range(2015..=2023),
                    doc_type: if rng.gen_bool(0.8) {
                        "article"
                    } else {
                        "review"
                    },
                    venue_type: "journal",
                    title: format!(
                        "Notes on {} and {}",
                        terms[i % terms.len()],
                        terms[(i + 1) % terms.len()]
                    ),
                    abstract_text: abstract_text(&mut rng, terms),
                    keywords: vec![keyword, terms[i % terms.len()].to_string()],
                    in_sources: [true; 3],
                    duplicated_in: None,
                });
                let wos_doi = doi_as(&key, 0);
                match group {
                    "core" => {
                        let _ = writeln!(labels, "{wos_doi},{k}");
                        let s: f64 = rng.gen_range(0.41..=1.0);
                        let _ = writeln!(scores, "{},{k},{s:.2}", doi_as(&key, 1));
                    }
                    "first" => {
                        let _ = writeln!(labels, "{wos_doi},{k}");
                        // Exactly at the threshold: must stay unclassified.
                        let _ = writeln!(scores, "{},{k},0.40", doi_as(&key, 1));
                    }
                    _ => {
                        let s: f64 = rng.gen_range(0.41..=1.0);
                        let _ = writeln!(scores, "{},{k},{s:.2}", doi_as(&key, 1));
                    }
                }
            }
        }
        let q = format!("AUTHKEY(\"sdg {k}\") AND NOT TITLE(\"erratum\")\n");
        write(&dir.join(format!("data/queries/sdg{k}.query")), &q)?;

        let mut prompts = String::new();
        for i in 0..spec.prompts_per_sdg {
            let p = PROMPTS[i % PROMPTS.len()].replace("{}", t.shared[i % t.shared.len()]);
            let _ = writeln!(prompts, "{p}");
        }
        write(&dir.join(format!("prompts/sdg{k}.txt")), &prompts)?;
    }
    // A label pointing outside the index and a malformed row.
    labels.push_str("10.5555/not.in.any.source,4\nnot-a-doi\n");
    scores.push_str("10.5555/syn.bad,4,1.7\n");

    let noise_kinds = 6;
    for i in 0..spec.noise_docs {
        let kind = i % noise_kinds;
        let mut d = Doc {
            key: format!("noise.{i:04}"),
            year: 2019,
            doc_type: "article",
            venue_type: "journal",
            title: "Noise record".into(),
            abstract_text: "it is shown that noise is linked to noise .".into(),
            keywords: vec![],
            in_sources: [true; 3],
            duplicated_in: None,
        };
        match kind {
            0 => d.year = 2010,
            1 => d.doc_type = "editorial",
            2 => d.venue_type = "conference",
            3 => d.abstract_text.clear(),
            4 => d.in_sources[i % 3] = false,
            _ => d.duplicated_in = Some(i % 3),
        }
        docs.push(d);
    }

    write_wos(&dir.join("data/wos.jsonl"), &docs)?;
    write_openalex(&dir.join("data/openalex.csv"), &docs)?;
    write_scopus(&dir.join("data/scopus.jsonl"), &docs)?;
    write(&dir.join("data/wos_labels.csv"), &labels)?;
    write(&dir.join("data/openalex_scores.csv"), &scores)?;
    let planted_path = dir.join("planted.json");
    write(
        &planted_path,
        &(serde_json::to_string_pretty(&planted)? + "\n"),
    )?;

    let config_path = dir.join("run.toml");
    write(&config_path, &run_toml(spec))?;
    Ok(SynthCorpus {
        config_path,
        planted,
    })
}

fn records_for(docs: &[Doc], source: usize) -> impl Iterator<Item = &Doc> {
    docs.iter()
        .filter(move |d| d.in_sources[source])
        .flat_map(move |d| {
            let n = if d.duplicated_in == Some(source) {
                2
            } else {
                1
            };
            std::iter::repeat_n(d, n)
        })
}

/// Upstream-style field names, mapped through the config schema.
fn write_wos(path: &Path, docs: &[Doc]) -> Result<()> {
    let mut out = String::new();
    for d in records_for(docs, 0) {
        let v = json!({
            "DI": doi_as(&d.key, 0),
            "PY": d.year,
            "TI": d.title,
            "AB": d.abstract_text,
            "DE": d.keywords.join("; "),
            "SO": "Journal of Synthetic Studies",
            "DT": d.doc_type,
            "VT": d.venue_type,
        });
        let _ = writeln!(out, "{v}");
    }
    out.push_str("{not json\n");
    write(path, &out)
}

fn write_openalex(path: &Path, docs: &[Doc]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "doi",
        "publication_year",
        "title",
        "abstract",
        "keywords",
        "venue",
        "type",
        "source_type",
    ])?;
    for d in records_for(docs, 1) {
        w.write_record([
            doi_as(&d.key, 1),
            format!("{}-06-01", d.year),
            d.title.clone(),
            d.abstract_text.clone(),
            d.keywords.join(";"),
            "Journal of Synthetic Studies".into(),
            d.doc_type.into(),
            d.venue_type.into(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_scopus(path: &Path, docs: &[Doc]) -> Result<()> {
    let mut out = String::new();
    for d in records_for(docs, 2) {
        let v = json!({
            "doi": doi_as(&d.key, 2),
            "year": d.year.to_string(),
            "title": d.title,
            "abstract": d.abstract_text,
            "keywords": d.keywords,
            "venue_title": "Journal of Synthetic Studies",
            "doc_type": d.doc_type,
            "venue_type": d.venue_type,
        });
        let _ = writeln!(out, "{v}");
    }
    write(path, &out)
}

fn run_toml(spec: &SynthSpec) -> String {
    let sdgs: Vec<String> = spec.sdgs.iter().map(u8::to_string).collect();
    let strategies: Vec<String> = spec.strategies.iter().map(|s| format!("\"{s}\"")).collect();
    let mut t = format!(
        r#"run_seed = {run_seed}
output_dir = "out"
sdgs = [{sdgs}]
threshold = 0.10

[decoding]
strategies = [{strategies}]
max_tokens = {max_tokens}

[prompts]
"#,
        run_seed = spec.run_seed,
        sdgs = sdgs.join(", "),
        strategies = strategies.join(", "),
        max_tokens = spec.max_tokens,
    );
    for k in &spec.sdgs {
        let _ = writeln!(t, "{k} = \"prompts/sdg{k}.txt\"");
    }
    t.push_str(
        r#"
[[sources]]
id = "wos"
path = "data/wos.jsonl"
schema = { doi = "DI", year = "PY", title = "TI", abstract = "AB", keywords = "DE", venue_title = "SO", doc_type = "DT", venue_type = "VT" }
rule = { kind = "labels", path = "data/wos_labels.csv" }

[[sources]]
id = "openalex"
path = "data/openalex.csv"
schema = { doi = "doi", year = "publication_year", title = "title", abstract = "abstract", keywords = "keywords", venue_title = "venue", doc_type = "type", venue_type = "source_type" }
rule = { kind = "score", path = "data/openalex_scores.csv", threshold = 0.4 }

[[sources]]
id = "scopus"
path = "data/scopus.jsonl"
rule = { kind = "query", dir = "data/queries" }
"#,
    );
    t
}

/// Three sets over `0..union` whose triple intersection holds exactly
/// `round(triple_pct / 100 * union)` elements; the rest are spread over the
/// other six regions at random.
pub fn planted_overlap_sets(union: usize, triple_pct: f64, seed: u64) -> [Vec<u32>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triple = (triple_pct / 100.0 * union as f64).round() as usize;
    let mut ids: Vec<u32> = (0..union as u32).collect();
    ids.shuffle(&mut rng);
    let mut sets: [Vec<u32>; 3] = Default::default();
    for (i, &id) in ids.iter().enumerate() {
        let mask: u32 = if i < triple {
            0b111
        } else {
            *[0b001, 0b010, 0b100, 0b011, 0b101, 0b110]
                .choose(&mut rng)
                .expect("regions")
        };
        for (b, set) in sets.iter_mut().enumerate() {
            if mask & (1 << b) != 0 {
                set.push(id);
            }
        }
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phrases::{tag_word, Tag};

    #[test]
    fn planted_terms_are_nouns_and_frames_are_not() {
        for t in &TERMS {
            for w in t.shared.iter().chain(&t.first).chain(&t.second) {
                assert_eq!(tag_word(w), Tag::Noun, "{w}");
            }
        }
        for f in FRAMES.iter().chain(&PROMPTS) {
            let text = f.replace("{}", ",");
            assert!(crate::phrases::phrases_in(&text).is_empty(), "{f}");
        }
    }

    #[test]
    fn planted_overlap_is_exact() {
        let sets = planted_overlap_sets(1000, 7.2, 3);
        let triple = sets[0]
            .iter()
            .filter(|x| sets[1].binary_search(x).is_ok() && sets[2].binary_search(x).is_ok())
            .count();
        assert_eq!(triple, 72);
    }

    #[test]
    fn writes_a_loadable_config() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            sdgs: vec![4],
            prompts_per_sdg: 3,
            ..SynthSpec::default()
        };
        let c = write_synthetic(dir.path(), &spec).unwrap();
        let cfg = crate::pipeline::RunConfig::load(&c.config_path).unwrap();
        assert_eq!(cfg.sources.len(), 3);
        assert_eq!(c.planted.exclusive[&Sdg::new(4).unwrap()].len(), 2);
    }
}
