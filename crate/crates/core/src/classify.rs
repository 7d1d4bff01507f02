//! Per-source SDG classification of joint-index publications.
//!
//! Three mechanisms produce the same [`SdgSubset`] type: delivered label
//! lists, score thresholds (strictly greater than the threshold), and boolean
//! field queries evaluated against the source's own record.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{normalize_doi, Doi, InputFormat, JointIndex};
use crate::error::{Error, Result};
use crate::exec;
use crate::query::{MatchDoc, QueryAst};

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.4;

/// A Sustainable Development Goal number, 1 to 17.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Sdg(u8);

impl Sdg {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=17).contains(&n) {
            Ok(Sdg(n))
        } else {
            Err(Error::Config(format!("SDG must be in 1..=17, got {n}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Accepts `4`, `"4"`, `"SDG4"`, `"sdg 4"`, `"SDG_04"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let digits = lower
            .strip_prefix("sdg")
            .unwrap_or(&lower)
            .trim_start_matches([' ', '_', '-']);
        digits
            .parse::<u8>()
            .map_err(|_| Error::Config(format!("not an SDG identifier: {s:?}")))
            .and_then(Sdg::new)
    }
}

impl TryFrom<u8> for Sdg {
    type Error = Error;
    fn try_from(n: u8) -> Result<Self> {
        Sdg::new(n)
    }
}

impl From<Sdg> for u8 {
    fn from(s: Sdg) -> u8 {
        s.0
    }
}

impl fmt::Display for Sdg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The classification mechanism a source uses.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassificationRule {
    LabelList {
        rows: Vec<(Doi, Sdg)>,
    },
    ScoreThreshold {
        rows: Vec<(Doi, Sdg, f64)>,
        threshold: f64,
    },
    Query {
        asts: BTreeMap<Sdg, QueryAst>,
    },
}

/// DOIs of the joint index classified under one SDG by one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdgSubset {
    pub sdg: Sdg,
    pub source_id: String,
    dois: Vec<Doi>,
}

impl SdgSubset {
    /// Sorts and deduplicates `dois`; fails if any DOI is outside `index`.
    pub fn new(
        index: &JointIndex,
        sdg: Sdg,
        source_id: impl Into<String>,
        dois: impl IntoIterator<Item = Doi>,
    ) -> Result<Self> {
        let set: BTreeSet<Doi> = dois.into_iter().collect();
        if let Some(outside) = set.iter().find(|d| !index.contains(d)) {
            return Err(Error::Config(format!(
                "DOI {outside} is not in the joint index"
            )));
        }
        Ok(Self {
            sdg,
            source_id: source_id.into(),
            dois: set.into_iter().collect(),
        })
    }

    pub fn dois(&self) -> &[Doi] {
        &self.dois
    }

    pub fn len(&self) -> usize {
        self.dois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dois.is_empty()
    }

    pub fn file_name(&self) -> String {
        format!("sdg{}.{}.dois", self.sdg, self.source_id)
    }

    /// One DOI per line, sorted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for d in &self.dois {
            s.push_str(d.as_str());
            s.push('\n');
        }
        s
    }

    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(self.file_name());
        let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(self.to_text().as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(index: &JointIndex, sdg: Sdg, source_id: &str, dir: &Path) -> Result<Self> {
        let path = dir.join(format!("sdg{sdg}.{source_id}.dois"));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let dois = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(normalize_doi)
            .collect::<Result<Vec<_>>>()?;
        Self::new(index, sdg, source_id, dois)
    }
}

/// Result of one label or score classification, with input diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub subsets: BTreeMap<Sdg, SdgSubset>,
    pub skipped_lines: usize,
    pub rejected_scores: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelFile {
    pub rows: Vec<(Doi, Sdg)>,
    pub malformed_lines: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreFile {
    pub rows: Vec<(Doi, Sdg, f64)>,
    pub malformed_lines: Vec<usize>,
}

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads `(doi, sdg[, score])` rows from JSONL (`{"doi":..,"sdg":..}`) or a
/// CSV with `doi,sdg[,score]` header.
fn read_rows(path: &Path, with_score: bool) -> Result<(Vec<(usize, Vec<String>)>, Vec<usize>)> {
    let fields: &[&str] = if with_score {
        &["doi", "sdg", "score"]
    } else {
        &["doi", "sdg"]
    };
    let mut rows = Vec::new();
    let mut malformed = Vec::new();
    match InputFormat::from_path(path) {
        InputFormat::Jsonl => {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let row = serde_json::from_str::<Value>(&line).ok().and_then(|v| {
                    fields
                        .iter()
                        .map(|k| v.get(*k).and_then(value_text))
                        .collect::<Option<Vec<_>>>()
                });
                match row {
                    Some(r) => rows.push((i + 1, r)),
                    None => malformed.push(i + 1),
                }
            }
        }
        InputFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .flexible(true)
                .from_path(path)
                .map_err(|e| match e.into_kind() {
                    csv::ErrorKind::Io(io) => Error::io(path, io),
                    other => Error::Schema(format!("{other:?}")),
                })?;
            let headers = rdr.headers()?.clone();
            let cols = fields
                .iter()
                .map(|f| headers.iter().position(|h| h.trim() == *f))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "{} must have header columns {}",
                        path.display(),
                        fields.join(",")
                    ))
                })?;
            for (i, rec) in rdr.records().enumerate() {
                let row = rec
                    .ok()
                    .and_then(|r| cols.iter().map(|&c| r.get(c).map(str::to_string)).collect());
                match row {
                    Some(r) => rows.push((i + 1, r)),
                    None => malformed.push(i + 1),
                }
            }
        }
    }
    Ok((rows, malformed))
}

pub fn read_labels(path: &Path) -> Result<LabelFile> {
    let (raw, mut malformed_lines) = read_rows(path, false)?;
    let mut rows = Vec::new();
    for (line, r) in raw {
        match (normalize_doi(&r[0]), Sdg::parse(&r[1])) {
            (Ok(d), Ok(s)) => rows.push((d, s)),
            _ => malformed_lines.push(line),
        }
    }
    malformed_lines.sort_unstable();
    Ok(LabelFile {
        rows,
        malformed_lines,
    })
}

pub fn read_scores(path: &Path) -> Result<ScoreFile> {
    let (raw, mut malformed_lines) = read_rows(path, true)?;
    let mut out = ScoreFile::default();
    for (line, r) in raw {
        match (
            normalize_doi(&r[0]),
            Sdg::parse(&r[1]),
            r[2].trim().parse::<f64>(),
        ) {
            (Ok(d), Ok(s), Ok(score)) if score.is_finite() => out.rows.push((d, s, score)),
            _ => malformed_lines.push(line),
        }
    }
    malformed_lines.sort_unstable();
    out.malformed_lines = malformed_lines;
    Ok(out)
}

fn empty_subsets(sdgs: &[Sdg], source_id: &str) -> BTreeMap<Sdg, SdgSubset> {
    sdgs.iter()
        .map(|&sdg| {
            (
                sdg,
                SdgSubset {
                    sdg,
                    source_id: source_id.to_string(),
                    dois: Vec::new(),
                },
            )
        })
        .collect()
}

fn finish(
    index: &JointIndex,
    source_id: &str,
    sdgs: &[Sdg],
    mut buckets: BTreeMap<Sdg, BTreeSet<Doi>>,
) -> BTreeMap<Sdg, SdgSubset> {
    let mut out = empty_subsets(sdgs, source_id);
    for (sdg, subset) in out.iter_mut() {
        if let Some(set) = buckets.remove(sdg) {
            subset.dois = set.into_iter().filter(|d| index.contains(d)).collect();
        }
    }
    out
}

/// Labeled DOIs intersected with the index, for each SDG in `sdgs`.
pub fn classify_by_labels(
    index: &JointIndex,
    source_id: &str,
    labels: &LabelFile,
    sdgs: &[Sdg],
) -> Classification {
    let mut buckets: BTreeMap<Sdg, BTreeSet<Doi>> = BTreeMap::new();
    for (doi, sdg) in &labels.rows {
        buckets.entry(*sdg).or_default().insert(doi.clone());
    }
    let mut warnings = Vec::new();
    if labels.rows.is_empty() {
        warnings.push(format!(
            "label input for `{source_id}` contains no valid rows"
        ));
    }
    Classification {
        subsets: finish(index, source_id, sdgs, buckets),
        skipped_lines: labels.malformed_lines.len(),
        rejected_scores: 0,
        warnings,
    }
}

/// DOIs whose score for the SDG is strictly above `threshold`.
pub fn classify_by_score(
    index: &JointIndex,
    source_id: &str,
    scores: &ScoreFile,
    threshold: f64,
    sdgs: &[Sdg],
) -> Result<Classification> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "score threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let mut buckets: BTreeMap<Sdg, BTreeSet<Doi>> = BTreeMap::new();
    let mut rejected = 0;
    for (doi, sdg, score) in &scores.rows {
        if !(0.0..=1.0).contains(score) {
            rejected += 1;
            continue;
        }
        if *score > threshold {
            buckets.entry(*sdg).or_default().insert(doi.clone());
        }
    }
    let mut warnings = Vec::new();
    if scores.rows.is_empty() {
        warnings.push(format!(
            "score input for `{source_id}` contains no valid rows"
        ));
    }
    Ok(Classification {
        subsets: finish(index, source_id, sdgs, buckets),
        skipped_lines: scores.malformed_lines.len(),
        rejected_scores: rejected,
        warnings,
    })
}

/// Index DOIs whose `source_id` record satisfies `ast`.
pub fn classify_by_query(
    index: &JointIndex,
    source_id: &str,
    sdg: Sdg,
    ast: &QueryAst,
) -> Result<SdgSubset> {
    let pos = index
        .source_position(source_id)
        .ok_or_else(|| Error::Config(format!("unknown source `{source_id}`")))?;
    let entries: Vec<(&Doi, &[crate::corpus::PublicationRecord])> = index.iter().collect();
    let hits = exec::map(&entries, |(doi, recs)| {
        MatchDoc::from_record(&recs[pos])
            .eval(ast)
            .then(|| (*doi).clone())
    });
    Ok(SdgSubset {
        sdg,
        source_id: source_id.to_string(),
        dois: hits.into_iter().flatten().collect(),
    })
}

/// Apply a rule for every SDG in `sdgs`.
pub fn classify(
    index: &JointIndex,
    source_id: &str,
    rule: &ClassificationRule,
    sdgs: &[Sdg],
) -> Result<Classification> {
    match rule {
        ClassificationRule::LabelList { rows } => Ok(classify_by_labels(
            index,
            source_id,
            &LabelFile {
                rows: rows.clone(),
                malformed_lines: Vec::new(),
            },
            sdgs,
        )),
        ClassificationRule::ScoreThreshold { rows, threshold } => classify_by_score(
            index,
            source_id,
            &ScoreFile {
                rows: rows.clone(),
                ..Default::default()
            },
            *threshold,
            sdgs,
        ),
        ClassificationRule::Query { asts } => {
            let mut subsets = BTreeMap::new();
            let mut warnings = Vec::new();
            for &sdg in sdgs {
                match asts.get(&sdg) {
                    Some(ast) => {
                        subsets.insert(sdg, classify_by_query(index, source_id, sdg, ast)?);
                    }
                    None => {
                        warnings.push(format!("no query for SDG {sdg} in `{source_id}`"));
                        subsets.extend(empty_subsets(&[sdg], source_id));
                    }
                }
            }
            Ok(Classification {
                subsets,
                skipped_lines: 0,
                rejected_scores: 0,
                warnings,
            })
        }
    }
}
