//! Publication metadata ingestion and the joint index.
//!
//! Each source snapshot is ingested into a [`SourceStore`] keyed by normalized
//! DOI. [`build_joint_index`] keeps the DOIs present in every source, unique
//! within each source, and passing the year, document-type, venue and
//! abstract filters. Every dropped record is attributed to exactly one rule
//! in the [`FilterReport`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec;

const DOI_PREFIXES: [&str; 3] = ["https://doi.org/", "http://doi.org/", "doi:"];

/// A normalized DOI: lowercase, trimmed, without URL or `doi:` prefix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Doi(String);

impl Doi {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Doi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Doi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        normalize_doi(s)
    }
}

/// Lowercase, trim and strip a leading `https://doi.org/`, `http://doi.org/`
/// or `doi:` prefix.
pub fn normalize_doi(raw: &str) -> Result<Doi> {
    let mut s = raw.trim().to_lowercase();
    for prefix in DOI_PREFIXES {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.trim_start().to_string();
            break;
        }
    }
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::InvalidDoi(raw.to_string()));
    }
    Ok(Doi(s.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    Article,
    Review,
    Other,
}

impl DocType {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "article" => DocType::Article,
            "review" => DocType::Review,
            _ => DocType::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueType {
    Journal,
    Other,
}

impl VenueType {
    pub fn parse(s: &str) -> Self {
        if s.trim().eq_ignore_ascii_case("journal") {
            VenueType::Journal
        } else {
            VenueType::Other
        }
    }
}

/// One publication as seen by one source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub doi: Doi,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub venue_title: String,
    pub year: i32,
    pub doc_type: DocType,
    pub venue_type: VenueType,
    pub source_id: String,
}

impl PublicationRecord {
    /// The canonical single-line JSON form used by store exports.
    pub fn canonical_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Maps canonical record fields onto upstream field (or CSV column) names.
///
/// `doi` and `year` are required on every line. Optional fields set to
/// `None` are left empty on ingest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub doi: String,
    pub year: String,
    #[serde(deserialize_with = "empty_as_none")]
    pub title: Option<String>,
    #[serde(rename = "abstract", deserialize_with = "empty_as_none")]
    pub abstract_text: Option<String>,
    #[serde(deserialize_with = "empty_as_none")]
    pub keywords: Option<String>,
    #[serde(deserialize_with = "empty_as_none")]
    pub venue_title: Option<String>,
    #[serde(deserialize_with = "empty_as_none")]
    pub doc_type: Option<String>,
    #[serde(deserialize_with = "empty_as_none")]
    pub venue_type: Option<String>,
}

fn empty_as_none<'de, D>(d: D) -> std::result::Result<Option<String>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let s = Option::<String>::deserialize(d)?;
    Ok(s.filter(|s| !s.is_empty()))
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            doi: "doi".into(),
            year: "year".into(),
            title: Some("title".into()),
            abstract_text: Some("abstract".into()),
            keywords: Some("keywords".into()),
            venue_title: Some("venue_title".into()),
            doc_type: Some("doc_type".into()),
            venue_type: Some("venue_type".into()),
        }
    }
}

impl FieldMap {
    fn mapped_names(&self) -> Vec<&str> {
        let mut names = vec![self.doi.as_str(), self.year.as_str()];
        for f in [
            &self.title,
            &self.abstract_text,
            &self.keywords,
            &self.venue_title,
            &self.doc_type,
            &self.venue_type,
        ]
        .into_iter()
        .flatten()
        {
            names.push(f.as_str());
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    #[default]
    Jsonl,
    Csv,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

/// All syntactically valid records of one source snapshot, sorted by DOI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceStore {
    pub source_id: String,
    records: Vec<PublicationRecord>,
    /// 1-based line numbers (data rows for CSV) that failed to parse.
    pub malformed_lines: Vec<usize>,
}

impl SourceStore {
    pub fn from_records(source_id: impl Into<String>, mut records: Vec<PublicationRecord>) -> Self {
        let source_id = source_id.into();
        for r in &mut records {
            r.source_id = source_id.clone();
        }
        sort_records(&mut records);
        Self {
            source_id,
            records,
            malformed_lines: Vec::new(),
        }
    }

    pub fn records(&self) -> &[PublicationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn skipped(&self) -> usize {
        self.malformed_lines.len()
    }

    /// DOIs stored more than once, with their multiplicity.
    pub fn duplicates(&self) -> BTreeMap<Doi, usize> {
        let mut out = BTreeMap::new();
        for w in self.records.chunk_by(|a, b| a.doi == b.doi) {
            if w.len() > 1 {
                out.insert(w[0].doi.clone(), w.len());
            }
        }
        out
    }

    pub fn write_canonical<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            w.write_all(r.canonical_line().as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_canonical(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 json")
    }

    /// Read back a file written by [`SourceStore::export`].
    pub fn load_canonical(path: &Path, source_id: &str) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str::<PublicationRecord>(&line)?);
            }
        }
        Ok(Self::from_records(source_id, records))
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_canonical(BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

fn sort_records(records: &mut [PublicationRecord]) {
    records.sort_by(|a, b| {
        a.doi
            .cmp(&b.doi)
            .then_with(|| a.canonical_line().cmp(&b.canonical_line()))
    });
}

/// Ingest a line-delimited JSON or CSV file into a store for `source_id`.
pub fn ingest_records(path: &Path, source_id: &str, schema: &FieldMap) -> Result<SourceStore> {
    ingest_records_as(path, InputFormat::from_path(path), source_id, schema)
}

pub fn ingest_records_as(
    path: &Path,
    format: InputFormat,
    source_id: &str,
    schema: &FieldMap,
) -> Result<SourceStore> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(f), format, source_id, schema).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader<R: Read>(
    reader: R,
    format: InputFormat,
    source_id: &str,
    schema: &FieldMap,
) -> Result<SourceStore> {
    let (records, malformed) = match format {
        InputFormat::Jsonl => ingest_jsonl(BufReader::new(reader), source_id, schema)?,
        InputFormat::Csv => ingest_csv(reader, source_id, schema)?,
    };
    let mut store = SourceStore::from_records(source_id, records);
    store.malformed_lines = malformed;
    Ok(store)
}

fn ingest_jsonl<R: BufRead>(
    reader: R,
    source_id: &str,
    schema: &FieldMap,
) -> Result<(Vec<PublicationRecord>, Vec<usize>)> {
    let mapped = schema.mapped_names();
    let mut seen_fields: BTreeSet<String> = BTreeSet::new();
    let mut parsed_objects = 0usize;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj = match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => obj,
            _ => {
                malformed.push(i + 1);
                continue;
            }
        };
        parsed_objects += 1;
        for name in &mapped {
            if !seen_fields.contains(*name) && obj.contains_key(*name) {
                seen_fields.insert((*name).to_string());
            }
        }
        let get = |name: &str| obj.get(name).and_then(json_text);
        let get_list = |name: &str| match obj.get(name) {
            Some(Value::Array(items)) => items.iter().filter_map(json_text).collect(),
            Some(v) => json_text(v).map(|s| split_keywords(&s)).unwrap_or_default(),
            None => Vec::new(),
        };
        match build_record(get, get_list, source_id, schema) {
            Some(r) => records.push(r),
            None => malformed.push(i + 1),
        }
    }
    if parsed_objects > 0 {
        if let Some(missing) = mapped.iter().find(|n| !seen_fields.contains(**n)) {
            return Err(Error::Schema(format!(
                "mapped field `{missing}` does not occur in any record"
            )));
        }
    }
    Ok((records, malformed))
}

fn ingest_csv<R: Read>(
    reader: R,
    source_id: &str,
    schema: &FieldMap,
) -> Result<(Vec<PublicationRecord>, Vec<usize>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if let Some(missing) = schema
        .mapped_names()
        .into_iter()
        .find(|n| !index.contains_key(n))
    {
        return Err(Error::Schema(format!(
            "mapped column `{missing}` is not in the CSV header"
        )));
    }
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                malformed.push(i + 1);
                continue;
            }
        };
        let get = |name: &str| {
            index
                .get(name)
                .and_then(|&c| row.get(c))
                .map(str::to_string)
        };
        let get_list = |name: &str| get(name).map(|s| split_keywords(&s)).unwrap_or_default();
        match build_record(get, get_list, source_id, schema) {
            Some(r) => records.push(r),
            None => malformed.push(i + 1),
        }
    }
    Ok((records, malformed))
}

fn json_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn split_keywords(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .collect()
}

/// Leading four digits of a year or date string.
fn parse_year(s: &str) -> Option<i32> {
    let s = s.trim();
    let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.len() != 4 {
        return None;
    }
    let rest = &s[4..];
    if !(rest.is_empty() || rest.starts_with('-') || rest.starts_with('/')) {
        return None;
    }
    digits.parse().ok()
}

fn build_record(
    get: impl Fn(&str) -> Option<String>,
    get_list: impl Fn(&str) -> Vec<String>,
    source_id: &str,
    schema: &FieldMap,
) -> Option<PublicationRecord> {
    let doi = normalize_doi(&get(&schema.doi)?).ok()?;
    let year = parse_year(&get(&schema.year)?)?;
    let opt = |f: &Option<String>| f.as_deref().and_then(&get).unwrap_or_default();
    Some(PublicationRecord {
        doi,
        title: opt(&schema.title),
        abstract_text: opt(&schema.abstract_text),
        keywords: schema
            .keywords
            .as_deref()
            .map(&get_list)
            .unwrap_or_default(),
        venue_title: opt(&schema.venue_title),
        year,
        doc_type: DocType::parse(&opt(&schema.doc_type)),
        venue_type: VenueType::parse(&opt(&schema.venue_type)),
        source_id: source_id.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JoinConfig {
    /// Inclusive publication-year bounds.
    pub year_window: (i32, i32),
    pub require_unique: bool,
}

impl Default for JoinConfig {
    fn default() -> Self {
        Self {
            year_window: (2015, 2023),
            require_unique: true,
        }
    }
}

/// Per-source drop counters. Every non-surviving record is counted under
/// exactly one of the record-level rules, checked in field order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDrops {
    pub raw: usize,
    /// Distinct DOIs excluded because they occur more than once.
    pub duplicates: usize,
    pub duplicate_records: usize,
    pub year: usize,
    pub doc_type: usize,
    pub venue: usize,
    pub missing_abstract: usize,
    /// Passed every filter here but is absent or filtered in another source.
    pub unmatched: usize,
    pub kept: usize,
}

impl SourceDrops {
    pub fn dropped_records(&self) -> usize {
        self.duplicate_records
            + self.year
            + self.doc_type
            + self.venue
            + self.missing_abstract
            + self.unmatched
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub per_source: BTreeMap<String, SourceDrops>,
}

/// DOIs indexed by all sources, with one record per source in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointIndex {
    pub sources: Vec<String>,
    records: BTreeMap<Doi, Vec<PublicationRecord>>,
    pub filter_report: FilterReport,
}

#[derive(Serialize, Deserialize)]
struct IndexLine {
    doi: Doi,
    records: Vec<PublicationRecord>,
}

#[derive(Serialize, Deserialize)]
struct IndexSummary {
    sources: Vec<String>,
    size: usize,
    filter_report: FilterReport,
}

impl JointIndex {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, doi: &Doi) -> bool {
        self.records.contains_key(doi)
    }

    pub fn dois(&self) -> impl Iterator<Item = &Doi> {
        self.records.keys()
    }

    pub fn source_position(&self, source_id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s == source_id)
    }

    /// The record `source_id` holds for `doi`.
    pub fn record(&self, doi: &Doi, source_id: &str) -> Option<&PublicationRecord> {
        let pos = self.source_position(source_id)?;
        self.records.get(doi).map(|rs| &rs[pos])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Doi, &[PublicationRecord])> {
        self.records.iter().map(|(d, rs)| (d, rs.as_slice()))
    }

    /// Writes `index.jsonl` and `summary.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("index.jsonl");
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(f);
        for (doi, records) in &self.records {
            let line = serde_json::to_string(&IndexLine {
                doi: doi.clone(),
                records: records.clone(),
            })?;
            writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let summary = IndexSummary {
            sources: self.sources.clone(),
            size: self.len(),
            filter_report: self.filter_report.clone(),
        };
        let spath = dir.join("summary.json");
        std::fs::write(&spath, serde_json::to_string_pretty(&summary)? + "\n")
            .map_err(|e| Error::io(&spath, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let spath = dir.join("summary.json");
        let summary: IndexSummary = serde_json::from_str(
            &std::fs::read_to_string(&spath).map_err(|e| Error::io(&spath, e))?,
        )?;
        let path = dir.join("index.jsonl");
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut records = BTreeMap::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let l: IndexLine = serde_json::from_str(&line)?;
            records.insert(l.doi, l.records);
        }
        Ok(Self {
            sources: summary.sources,
            records,
            filter_report: summary.filter_report,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Duplicate,
    Year,
    DocType,
    Venue,
    MissingAbstract,
    Pass,
}

fn judge(r: &PublicationRecord, multiplicity: usize, cfg: &JoinConfig) -> Verdict {
    let (lo, hi) = cfg.year_window;
    if cfg.require_unique && multiplicity > 1 {
        Verdict::Duplicate
    } else if r.year < lo || r.year > hi {
        Verdict::Year
    } else if !matches!(r.doc_type, DocType::Article | DocType::Review) {
        Verdict::DocType
    } else if r.venue_type != VenueType::Journal {
        Verdict::Venue
    } else if r.abstract_text.trim().is_empty() {
        Verdict::MissingAbstract
    } else {
        Verdict::Pass
    }
}

fn filter_source<'a>(
    store: &'a SourceStore,
    cfg: &JoinConfig,
) -> (BTreeMap<&'a Doi, &'a PublicationRecord>, SourceDrops) {
    let mut drops = SourceDrops {
        raw: store.len(),
        ..Default::default()
    };
    let mut survivors = BTreeMap::new();
    // Records are sorted by DOI, so each group is one DOI's copies.
    for group in store.records.chunk_by(|a, b| a.doi == b.doi) {
        let mut dup_counted = false;
        for r in group {
            match judge(r, group.len(), cfg) {
                Verdict::Duplicate => {
                    drops.duplicate_records += 1;
                    if !dup_counted {
                        drops.duplicates += 1;
                        dup_counted = true;
                    }
                }
                Verdict::Year => drops.year += 1,
                Verdict::DocType => drops.doc_type += 1,
                Verdict::Venue => drops.venue += 1,
                Verdict::MissingAbstract => drops.missing_abstract += 1,
                Verdict::Pass => {
                    if survivors.contains_key(&r.doi) {
                        // Only reachable when uniqueness is not required.
                        drops.duplicate_records += 1;
                        if !dup_counted {
                            drops.duplicates += 1;
                            dup_counted = true;
                        }
                    } else {
                        survivors.insert(&r.doi, r);
                    }
                }
            }
        }
    }
    (survivors, drops)
}

/// Join ≥2 source stores on exact normalized DOI under the configured filters.
pub fn build_joint_index(sources: &[SourceStore], cfg: &JoinConfig) -> Result<JointIndex> {
    if sources.len() < 2 {
        return Err(Error::Config(format!(
            "a joint index needs at least 2 sources, got {}",
            sources.len()
        )));
    }
    let mut ids = BTreeSet::new();
    for s in sources {
        if !ids.insert(s.source_id.as_str()) {
            return Err(Error::Config(format!(
                "duplicate source id `{}`",
                s.source_id
            )));
        }
        if s.is_empty() {
            return Err(Error::Config(format!(
                "source `{}` has no records",
                s.source_id
            )));
        }
    }
    if cfg.year_window.0 > cfg.year_window.1 {
        return Err(Error::Config(format!(
            "empty year window {:?}",
            cfg.year_window
        )));
    }

    let filtered = exec::map(sources, |s| filter_source(s, cfg));

    let (smallest, _) = filtered
        .iter()
        .enumerate()
        .min_by_key(|(_, (m, _))| m.len())
        .expect("at least two sources");
    let mut records = BTreeMap::new();
    for doi in filtered[smallest].0.keys() {
        let per_source: Option<Vec<PublicationRecord>> = filtered
            .iter()
            .map(|(m, _)| m.get(doi).map(|r| (*r).clone()))
            .collect();
        if let Some(rs) = per_source {
            records.insert((*doi).clone(), rs);
        }
    }

    let mut report = FilterReport::default();
    for (store, (survivors, mut drops)) in sources.iter().zip(filtered) {
        drops.kept = records.len();
        drops.unmatched = survivors.len() - records.len();
        report.per_source.insert(store.source_id.clone(), drops);
    }
    Ok(JointIndex {
        sources: sources.iter().map(|s| s.source_id.clone()).collect(),
        records,
        filter_report: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(doi: &str, year: i32) -> PublicationRecord {
        PublicationRecord {
            doi: normalize_doi(doi).unwrap(),
            title: format!("title {doi}"),
            abstract_text: "an abstract".into(),
            keywords: vec!["k".into()],
            venue_title: "journal of things".into(),
            year,
            doc_type: DocType::Article,
            venue_type: VenueType::Journal,
            source_id: String::new(),
        }
    }

    fn store(id: &str, dois: &[&str]) -> SourceStore {
        SourceStore::from_records(id, dois.iter().map(|d| rec(d, 2019)).collect())
    }

    #[test]
    fn normalize_doi_examples() {
        assert_eq!(
            normalize_doi("https://doi.org/10.1000/ABC")
                .unwrap()
                .as_str(),
            "10.1000/abc"
        );
        assert_eq!(
            normalize_doi("10.1000/xyz").unwrap().as_str(),
            "10.1000/xyz"
        );
        assert_eq!(
            normalize_doi("  DOI:10.5555/A.B  ").unwrap().as_str(),
            "10.5555/a.b"
        );
        assert_eq!(
            normalize_doi("http://doi.org/10.1/X").unwrap().as_str(),
            "10.1/x"
        );
    }

    #[test]
    fn normalize_doi_rejects_empty() {
        assert!(matches!(normalize_doi("   "), Err(Error::InvalidDoi(_))));
        assert!(matches!(normalize_doi("doi:"), Err(Error::InvalidDoi(_))));
        assert!(matches!(
            normalize_doi("https://doi.org/  "),
            Err(Error::InvalidDoi(_))
        ));
    }

    const FIXTURE: &str = r#"{"doi":"10.1/a","year":2019,"title":"A","abstract":"x","keywords":["k1","k2"],"venue_title":"J","doc_type":"article","venue_type":"journal"}
{"doi":"https://doi.org/10.1/B","year":"2020-01-02","title":"B","abstract":"y","keywords":"k1; k3","venue_title":"J","doc_type":"Review","venue_type":"journal"}
{"doi":"10.1/c","year":2021,"title":"C","abstract":"","keywords":[],"venue_title":"J","doc_type":"book","venue_type":"other"}
"#;

    #[test]
    fn ingest_valid_fixture() {
        let s = ingest_reader(
            FIXTURE.as_bytes(),
            InputFormat::Jsonl,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.skipped(), 0);
        let b = &s.records()[1];
        assert_eq!(b.doi.as_str(), "10.1/b");
        assert_eq!(b.year, 2020);
        assert_eq!(b.keywords, vec!["k1", "k3"]);
        assert_eq!(b.doc_type, DocType::Review);
        assert_eq!(s.records()[2].doc_type, DocType::Other);
    }

    #[test]
    fn ingest_counts_malformed_lines() {
        let input = format!("{FIXTURE}{{not json\n");
        let s = ingest_reader(
            input.as_bytes(),
            InputFormat::Jsonl,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.skipped(), 1);
        assert_eq!(s.malformed_lines, vec![4]);
    }

    #[test]
    fn ingest_rejects_bad_year_and_missing_doi() {
        let input = r#"{"doi":"10.1/a","year":19}
{"year":2019}
{"doi":"  ","year":2019}
{"doi":"10.1/d","year":2019}
"#;
        let schema = FieldMap {
            title: None,
            abstract_text: None,
            keywords: None,
            venue_title: None,
            doc_type: None,
            venue_type: None,
            ..FieldMap::default()
        };
        let s = ingest_reader(input.as_bytes(), InputFormat::Jsonl, "x", &schema).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.malformed_lines, vec![1, 2, 3]);
    }

    #[test]
    fn schema_error_for_absent_field() {
        let schema = FieldMap {
            keywords: Some("author_keywords".into()),
            ..FieldMap::default()
        };
        let err =
            ingest_reader(FIXTURE.as_bytes(), InputFormat::Jsonl, "wos", &schema).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn csv_adapter_matches_jsonl() {
        let csv = "doi,year,title,abstract,keywords,venue_title,doc_type,venue_type\n\
                   10.1/a,2019,A,x,k1;k2,J,article,journal\n\
                   https://doi.org/10.1/B,2020-01-02,B,y,k1; k3,J,Review,journal\n\
                   10.1/c,2021,C,,,J,book,other\n";
        let a = ingest_reader(
            csv.as_bytes(),
            InputFormat::Csv,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        let b = ingest_reader(
            FIXTURE.as_bytes(),
            InputFormat::Jsonl,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        let bad = FieldMap {
            title: Some("headline".into()),
            ..FieldMap::default()
        };
        assert!(matches!(
            ingest_reader(csv.as_bytes(), InputFormat::Csv, "wos", &bad),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn duplicate_within_source_is_stored_and_flagged() {
        let input = r#"{"doi":"10.1/a","year":2019}
{"doi":"10.1/A","year":2020}
{"doi":"10.1/b","year":2019}
"#;
        let schema = FieldMap {
            title: None,
            abstract_text: None,
            keywords: None,
            venue_title: None,
            doc_type: None,
            venue_type: None,
            ..FieldMap::default()
        };
        let s = ingest_reader(input.as_bytes(), InputFormat::Jsonl, "x", &schema).unwrap();
        assert_eq!(s.len(), 3);
        // Linear-scan multiplicity oracle.
        let mut oracle: BTreeMap<String, usize> = BTreeMap::new();
        for r in s.records() {
            *oracle.entry(r.doi.to_string()).or_default() += 1;
        }
        oracle.retain(|_, n| *n > 1);
        let got: BTreeMap<String, usize> = s
            .duplicates()
            .into_iter()
            .map(|(d, n)| (d.to_string(), n))
            .collect();
        assert_eq!(got, oracle);
        assert_eq!(got.get("10.1/a"), Some(&2));
    }

    #[test]
    fn intersection_of_three_sources() {
        let a = store("a", &["d1", "d2"]);
        let b = store("b", &["d1", "d3"]);
        let c = store("c", &["d1"]);
        let idx = build_joint_index(&[a, b, c], &JoinConfig::default()).unwrap();
        let dois: Vec<&str> = idx.dois().map(Doi::as_str).collect();
        assert_eq!(dois, vec!["d1"]);
        assert_eq!(idx.filter_report.per_source["a"].unmatched, 1);
        assert_eq!(
            idx.record(&normalize_doi("d1").unwrap(), "b")
                .unwrap()
                .source_id,
            "b"
        );
    }

    #[test]
    fn duplicated_doi_is_excluded() {
        let a = store("a", &["d1", "d1", "d2"]);
        let b = store("b", &["d1", "d2"]);
        let c = store("c", &["d1", "d2"]);
        let idx = build_joint_index(&[a, b, c], &JoinConfig::default()).unwrap();
        let dois: Vec<&str> = idx.dois().map(Doi::as_str).collect();
        assert_eq!(dois, vec!["d2"]);
        let ra = &idx.filter_report.per_source["a"];
        assert_eq!(ra.duplicates, 1);
        assert_eq!(ra.duplicate_records, 2);
        assert_eq!(ra.raw - ra.kept, ra.dropped_records());
        assert_eq!(idx.filter_report.per_source["b"].unmatched, 1);
    }

    #[test]
    fn duplicates_kept_once_when_uniqueness_not_required() {
        let a = store("a", &["d1", "d1"]);
        let b = store("b", &["d1"]);
        let cfg = JoinConfig {
            require_unique: false,
            ..JoinConfig::default()
        };
        let idx = build_joint_index(&[a, b], &cfg).unwrap();
        assert_eq!(idx.len(), 1);
        let ra = &idx.filter_report.per_source["a"];
        assert_eq!(ra.duplicate_records, 1);
        assert_eq!(ra.raw - ra.kept, ra.dropped_records());
    }

    #[test]
    fn filters_are_attributed_in_order() {
        let mut recs = vec![
            rec("y", 2014),
            rec("t", 2019),
            rec("v", 2019),
            rec("ab", 2019),
            rec("ok", 2023),
        ];
        recs[1].doc_type = DocType::Other;
        recs[2].venue_type = VenueType::Other;
        recs[3].abstract_text = "  ".into();
        let a = SourceStore::from_records("a", recs);
        let b = store("b", &["y", "t", "v", "ab", "ok"]);
        let idx = build_joint_index(&[a, b], &JoinConfig::default()).unwrap();
        assert_eq!(idx.len(), 1);
        let ra = &idx.filter_report.per_source["a"];
        assert_eq!(
            (ra.year, ra.doc_type, ra.venue, ra.missing_abstract),
            (1, 1, 1, 1)
        );
        assert_eq!(idx.filter_report.per_source["b"].unmatched, 4);
    }

    #[test]
    fn fewer_than_two_sources_is_config_error() {
        let a = store("a", &["d1"]);
        assert!(matches!(
            build_joint_index(&[a], &JoinConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn export_then_reingest_is_identical() {
        let s = ingest_reader(
            FIXTURE.as_bytes(),
            InputFormat::Jsonl,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        let text = s.to_canonical_string();
        let again = ingest_reader(
            text.as_bytes(),
            InputFormat::Jsonl,
            "wos",
            &FieldMap::default(),
        )
        .unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_canonical_string(), text);
    }

    #[test]
    fn joint_index_save_load() {
        let a = store("a", &["d1", "d2"]);
        let b = store("b", &["d1", "d2"]);
        let idx = build_joint_index(&[a, b], &JoinConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        assert_eq!(JointIndex::load(dir.path()).unwrap(), idx);
    }
}
