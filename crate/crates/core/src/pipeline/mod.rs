//! Config-driven orchestration of the full run.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! manifest.json
//! corpus/<source>.jsonl          canonical ingested stores
//! index/{index.jsonl,summary.json}
//! subsets/sdg<k>.<source>.dois
//! models/sdg<k>.<source>.lm      (models/base.lm when base_lambda > 0)
//! responses/sdg<k>.<source>.<strategy>.jsonl
//! phrases/sdg<k>.<source>.csv, phrases/sdg<k>.common.csv
//! reports/*.csv, reports/*.svg
//! failed/FAILED                  only after a failed stage
//! ```
//!
//! Every stage reads its inputs from the files earlier stages wrote, so any
//! stage can be re-run on its own.

mod config;
mod manifest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use config::{DecodingSection, LmSection, RuleConfig, RunConfig, SourceConfig};
pub use manifest::{
    config_digest, sha256_bytes, sha256_file, Artifact, Manifest, StageRecord, MANIFEST_FILE,
};

use manifest::StageLog;

use crate::classify::{self, ClassificationRule, Sdg, SdgSubset};
use crate::corpus::{self, InputFormat, JointIndex, SourceStore};
use crate::decoding::{self, DecodingConfig, GenerationBatch};
use crate::error::{Error, Result};
use crate::exec;
use crate::lm::{tokenize, LmAdapter, MixtureModel, NgramModel, Vocabulary};
use crate::overlap;
use crate::phrases::{self, CommonUniqueSets, PhraseTable};
use crate::query::parse_query;
use crate::report;

pub const STAGES: [&str; 8] = [
    "ingest", "join", "classify", "overlap", "train", "generate", "analyze", "report",
];

pub const FAILED_DIR: &str = "failed";

/// Restricts per-(SDG, source) stages. Empty means everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Selection {
    pub sdgs: BTreeSet<Sdg>,
    pub sources: BTreeSet<String>,
}

impl Selection {
    /// `sdg=5,source=openalex`; keys may repeat.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut sel = Selection::default();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::Config(format!("bad selector {part:?}, expected key=value"))
            })?;
            match k.trim() {
                "sdg" => {
                    sel.sdgs.insert(Sdg::parse(v)?);
                }
                "source" => {
                    sel.sources.insert(v.trim().to_string());
                }
                other => return Err(Error::Config(format!("unknown selector key `{other}`"))),
            }
        }
        Ok(sel)
    }

    pub fn is_all(&self) -> bool {
        self.sdgs.is_empty() && self.sources.is_empty()
    }

    pub fn has_sdg(&self, sdg: Sdg) -> bool {
        self.sdgs.is_empty() || self.sdgs.contains(&sdg)
    }

    pub fn has_source(&self, id: &str) -> bool {
        self.sources.is_empty() || self.sources.contains(id)
    }
}

fn stage_err(stage: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage,
            source: Box::new(e),
        },
    }
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn model_file(sdg: Sdg, source: &str) -> String {
    format!("sdg{}.{source}.lm", sdg.get())
}

pub struct Pipeline {
    cfg: RunConfig,
    out: PathBuf,
    only: Selection,
    manifest: Manifest,
    stores: Option<Vec<SourceStore>>,
    index: Option<Arc<JointIndex>>,
}

impl Pipeline {
    /// Continues the manifest in the output directory if it was written for
    /// the same config, otherwise starts a new one.
    pub fn open(cfg: RunConfig, only: Selection) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.output();
        mkdir(&out)?;
        let fresh = Manifest::new(&cfg)?;
        let manifest = match Manifest::load(&out) {
            Ok(m) if m.config_digest == fresh.config_digest => m,
            _ => fresh,
        };
        Ok(Self {
            cfg,
            out,
            only,
            manifest,
            stores: None,
            index: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    fn dir(&self, name: &str) -> Result<PathBuf> {
        let d = self.out.join(name);
        mkdir(&d)?;
        Ok(d)
    }

    fn workers(&self) -> Option<usize> {
        exec::workers_from_env().or(self.cfg.workers)
    }

    fn record_input(&mut self, configured: &Path) -> Result<()> {
        let digest = sha256_file(&self.cfg.resolve(configured))?;
        self.manifest
            .inputs
            .insert(configured.to_string_lossy().into_owned(), digest);
        Ok(())
    }

    /// Run every stage, starting a new manifest.
    pub fn run_all(&mut self) -> Result<&Manifest> {
        self.manifest = Manifest::new(&self.cfg)?;
        for stage in STAGES {
            self.run_stage(stage)?;
        }
        let failed = self.out.join(FAILED_DIR);
        if failed.exists() {
            std::fs::remove_dir_all(&failed).map_err(|e| Error::io(&failed, e))?;
        }
        Ok(&self.manifest)
    }

    /// Run one stage and save the manifest. A failure leaves a marker under
    /// `failed/` and returns the error tagged with the stage name.
    pub fn run_stage(&mut self, stage: &str) -> Result<()> {
        let name: &'static str = STAGES
            .iter()
            .copied()
            .find(|s| *s == stage)
            .ok_or_else(|| Error::Config(format!("unknown stage `{stage}`")))?;
        let workers = self.workers();
        let result = exec::with_workers(workers, || self.dispatch(name)).map_err(stage_err(name));
        match result {
            Ok(log) => {
                self.finish_stage(name, log);
                self.manifest.save(&self.out)?;
                Ok(())
            }
            Err(e) => {
                self.mark_failed(&e)?;
                Err(e)
            }
        }
    }

    fn dispatch(&mut self, stage: &'static str) -> Result<StageLog> {
        match stage {
            "ingest" => self.ingest(),
            "join" => self.join(),
            "classify" => self.classify(),
            "overlap" => self.overlap(),
            "train" => self.train(),
            "generate" => self.generate(),
            "analyze" => self.analyze(),
            "report" => self.report(),
            _ => unreachable!("stage names are checked by run_stage"),
        }
    }

    fn mark_failed(&self, e: &Error) -> Result<()> {
        let dir = self.out.join(FAILED_DIR);
        mkdir(&dir)?;
        let cause = match e {
            Error::Stage { source, .. } => source.to_string(),
            other => other.to_string(),
        };
        let text = format!(
            "stage: {}\ncause: {cause}\n",
            e.stage_name().unwrap_or("unknown")
        );
        let path = dir.join("FAILED");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        // Keep the record of the stages that did complete.
        self.manifest.save(&self.out).map(|_| ())
    }

    /// Store a stage record, merging with the previous one when only a
    /// selection was re-run.
    fn finish_stage(&mut self, stage: &str, log: StageLog) {
        let mut record = log.record;
        let partial =
            !self.only.is_all() && matches!(stage, "train" | "generate" | "analyze" | "report");
        if partial {
            if let Some(old) = self.manifest.stages.get(stage) {
                let mut merged = old.clone();
                merged.artifacts.extend(record.artifacts);
                merged.counts.extend(record.counts);
                record = merged;
            }
        }
        match stage {
            "train" => {
                let n = record
                    .artifacts
                    .keys()
                    .filter(|k| k.starts_with("models/sdg"))
                    .count();
                record.counts.insert("models".into(), n as u64);
            }
            "generate" => {
                let per_file: Vec<u64> = record
                    .counts
                    .iter()
                    .filter(|(k, _)| k.starts_with("responses/"))
                    .map(|(_, &v)| v)
                    .collect();
                record
                    .counts
                    .insert("batches".into(), per_file.len() as u64);
                record
                    .counts
                    .insert("responses".into(), per_file.iter().sum());
            }
            _ => {}
        }
        self.manifest.stages.insert(stage.to_string(), record);
    }

    fn ingest(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let dir = self.dir("corpus")?;
        let cfg = &self.cfg;
        let stores = exec::try_map(&cfg.sources, |s| {
            let path = cfg.resolve(&s.path);
            let format = s.format.unwrap_or_else(|| InputFormat::from_path(&path));
            corpus::ingest_records_as(&path, format, &s.id, &s.schema)
        })?;
        let mut summary = String::from("source,records,malformed_lines\n");
        for store in &stores {
            let path = dir.join(format!("{}.jsonl", store.source_id));
            store.export(&path)?;
            log.artifact(&path)?;
            log.count(&format!("{}.records", store.source_id), store.len());
            log.count(
                &format!("{}.malformed_lines", store.source_id),
                store.skipped(),
            );
            let _ = writeln!(
                summary,
                "{},{},{}",
                store.source_id,
                store.len(),
                store.skipped()
            );
        }
        log.write(&self.dir("reports")?.join("ingest.csv"), summary)?;
        for s in self.cfg.sources.clone() {
            self.record_input(&s.path)?;
        }
        self.stores = Some(stores);
        self.index = None;
        Ok(log)
    }

    fn stores(&mut self) -> Result<Vec<SourceStore>> {
        if let Some(s) = self.stores.take() {
            return Ok(s);
        }
        let dir = self.out.join("corpus");
        self.cfg
            .sources
            .iter()
            .map(|s| SourceStore::load_canonical(&dir.join(format!("{}.jsonl", s.id)), &s.id))
            .collect()
    }

    fn join(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let stores = self.stores()?;
        let index = corpus::build_joint_index(&stores, &self.cfg.join_config())?;
        let dir = self.dir("index")?;
        index.save(&dir)?;
        log.artifact(&dir.join("index.jsonl"))?;
        log.artifact(&dir.join("summary.json"))?;
        let mut csv = String::from(
            "source,raw,duplicates,duplicate_records,year,doc_type,venue,missing_abstract,unmatched,kept\n",
        );
        for (src, d) in &index.filter_report.per_source {
            let _ = writeln!(
                csv,
                "{src},{},{},{},{},{},{},{},{},{}",
                d.raw,
                d.duplicates,
                d.duplicate_records,
                d.year,
                d.doc_type,
                d.venue,
                d.missing_abstract,
                d.unmatched,
                d.kept
            );
        }
        log.write(&self.dir("reports")?.join("filter_report.csv"), csv)?;
        log.count("records", index.len());
        self.index = Some(Arc::new(index));
        Ok(log)
    }

    fn index(&mut self) -> Result<Arc<JointIndex>> {
        if let Some(i) = &self.index {
            return Ok(Arc::clone(i));
        }
        let index = Arc::new(JointIndex::load(&self.out.join("index"))?);
        self.index = Some(Arc::clone(&index));
        Ok(index)
    }

    fn rule(&mut self, src: &SourceConfig) -> Result<(ClassificationRule, usize)> {
        Ok(match &src.rule {
            RuleConfig::Labels { path } => {
                self.record_input(path)?;
                let f = classify::read_labels(&self.cfg.resolve(path))?;
                let skipped = f.malformed_lines.len();
                (ClassificationRule::LabelList { rows: f.rows }, skipped)
            }
            RuleConfig::Score { path, threshold } => {
                self.record_input(path)?;
                let f = classify::read_scores(&self.cfg.resolve(path))?;
                let skipped = f.malformed_lines.len();
                (
                    ClassificationRule::ScoreThreshold {
                        rows: f.rows,
                        threshold: *threshold,
                    },
                    skipped,
                )
            }
            RuleConfig::Query { dir } => {
                let mut asts = BTreeMap::new();
                for &sdg in &self.cfg.sdgs.clone() {
                    let rel = dir.join(format!("sdg{}.query", sdg.get()));
                    self.record_input(&rel)?;
                    let path = self.cfg.resolve(&rel);
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    let ast = parse_query(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    asts.insert(sdg, ast);
                }
                (ClassificationRule::Query { asts }, 0)
            }
        })
    }

    fn classify(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let index = self.index()?;
        let dir = self.dir("subsets")?;
        for src in self.cfg.sources.clone() {
            let (rule, skipped) = self.rule(&src)?;
            let c = classify::classify(&index, &src.id, &rule, &self.cfg.sdgs)?;
            log.count(&format!("{}.skipped_lines", src.id), skipped);
            log.count(&format!("{}.rejected_scores", src.id), c.rejected_scores);
            for subset in c.subsets.values() {
                let path = subset.save(&dir)?;
                log.artifact(&path)?;
                log.count(&format!("sdg{}.{}", subset.sdg.get(), src.id), subset.len());
            }
        }
        Ok(log)
    }

    fn subset(&mut self, sdg: Sdg, source: &str) -> Result<SdgSubset> {
        let index = self.index()?;
        SdgSubset::load(&index, sdg, source, &self.out.join("subsets"))
    }

    fn overlap(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let reports = self.dir("reports")?;
        let mut partitions = BTreeMap::new();
        for &sdg in &self.cfg.sdgs.clone() {
            let subsets = self
                .cfg
                .source_ids()
                .iter()
                .map(|s| self.subset(sdg, s))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&SdgSubset> = subsets.iter().collect();
            let p = overlap::venn_partition(&refs)?;
            if (2..=3).contains(&p.sources.len()) {
                let svg = overlap::venn_svg(&format!("SDG {sdg}"), &p)?;
                log.write(&reports.join(format!("venn_sdg{}.svg", sdg.get())), svg)?;
            }
            log.count(&format!("sdg{}.union", sdg.get()), p.union_size);
            log.count(
                &format!("sdg{}.all_sources", sdg.get()),
                p.count(p.all_mask()),
            );
            partitions.insert(sdg, p);
        }
        log.write(
            &reports.join("overlap.csv"),
            overlap::overlap_csv(&partitions),
        )?;
        let summary = overlap::overlap_report(&partitions)?;
        log.write(
            &reports.join("overlap_summary.csv"),
            overlap::overlap_summary_csv(&summary),
        )?;
        Ok(log)
    }

    fn jobs(&self) -> Vec<(Sdg, String)> {
        let mut jobs = Vec::new();
        for &sdg in &self.cfg.sdgs {
            for s in &self.cfg.sources {
                if self.only.has_sdg(sdg) && self.only.has_source(&s.id) {
                    jobs.push((sdg, s.id.clone()));
                }
            }
        }
        jobs
    }

    fn train(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let index = self.index()?;
        let dir = self.dir("models")?;
        let lm = self.cfg.lm.lm_config();
        let base_vocab: Option<Vocabulary> = if self.cfg.lm.base_lambda > 0.0 {
            let docs: Vec<Vec<String>> = index
                .iter()
                .flat_map(|(_, recs)| recs.iter().map(|r| tokenize(&r.abstract_text)))
                .collect();
            let base = NgramModel::train_tokens(&docs, &lm, None)?.with_meta("role", "base");
            let path = dir.join("base.lm");
            base.save(&path)?;
            log.artifact(&path)?;
            Some(base.vocab().clone())
        } else {
            None
        };
        let mut work = Vec::new();
        for (sdg, src) in self.jobs() {
            let subset = self.subset(sdg, &src)?;
            work.push((sdg, src, subset));
        }
        let models = exec::try_map(&work, |(sdg, src, subset)| {
            let docs: Vec<Vec<String>> = subset
                .dois()
                .iter()
                .filter_map(|d| index.record(d, src))
                .map(|r| tokenize(&r.abstract_text))
                .collect();
            let model = NgramModel::train_tokens(&docs, &lm, base_vocab.clone())
                .map_err(|e| Error::Training(format!("SDG {sdg} / {src}: {e}")))?
                .with_meta("sdg", sdg.get().to_string())
                .with_meta("source", src.as_str());
            Ok::<_, Error>((dir.join(model_file(*sdg, src)), model, docs.len()))
        })?;
        for ((sdg, src, _), (path, model, n_docs)) in work.iter().zip(models) {
            model.save(&path)?;
            log.artifact(&path)?;
            log.count(&format!("sdg{}.{src}.docs", sdg.get()), n_docs);
        }
        Ok(log)
    }

    fn generate(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let models_dir = self.out.join("models");
        let dir = self.dir("responses")?;
        let mut prompts = BTreeMap::new();
        for &sdg in &self.cfg.sdgs.clone() {
            if !self.only.has_sdg(sdg) {
                continue;
            }
            let rel = self.cfg.prompts[&sdg.get().to_string()].clone();
            self.record_input(&rel)?;
            prompts.insert(sdg, decoding::read_prompts(&self.cfg.resolve(&rel))?);
        }
        let base = if self.cfg.lm.base_lambda > 0.0 {
            Some(NgramModel::load(&models_dir.join("base.lm"))?)
        } else {
            None
        };
        let mut adapters: BTreeMap<(Sdg, String), Arc<dyn LmAdapter>> = BTreeMap::new();
        for (sdg, src) in self.jobs() {
            let model = NgramModel::load(&models_dir.join(model_file(sdg, &src)))?;
            let adapter: Arc<dyn LmAdapter> = match &base {
                Some(b) => Arc::new(MixtureModel::new(
                    model,
                    b.clone(),
                    self.cfg.lm.base_lambda,
                )?),
                None => Arc::new(model),
            };
            adapters.insert((sdg, src), adapter);
        }
        let mut work = Vec::new();
        for ((sdg, src), model) in &adapters {
            for &strategy in &self.cfg.decoding.strategies {
                work.push((*sdg, src.clone(), Arc::clone(model), strategy));
            }
        }
        let d = &self.cfg.decoding;
        let seed = self.cfg.run_seed;
        let batches: Vec<GenerationBatch> = exec::try_map(&work, |(sdg, src, model, strategy)| {
            let cfg = DecodingConfig {
                strategy: *strategy,
                max_tokens: d.max_tokens,
                seed,
            };
            decoding::generate_batch(model.as_ref(), &prompts[sdg], *sdg, src, &cfg, d.repeats)
        })?;
        for batch in &batches {
            let path = batch.write(&dir)?;
            log.artifact(&path)?;
            log.count(
                &format!("responses/{}", batch.file_name()),
                batch.responses.len(),
            );
        }
        Ok(log)
    }

    fn table_path(&self, sdg: Sdg, src: &str) -> PathBuf {
        self.out
            .join("phrases")
            .join(format!("sdg{}.{src}.csv", sdg.get()))
    }

    fn load_table(&self, sdg: Sdg, src: &str) -> Result<PhraseTable> {
        let path = self.table_path(sdg, src);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        PhraseTable::from_csv(sdg, src, &text)
    }

    fn analyze(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let responses = self.out.join("responses");
        let dir = self.dir("phrases")?;
        let (fraction, mode) = (self.cfg.threshold, self.cfg.count_mode);
        let tags: Vec<&str> = self
            .cfg
            .decoding
            .strategies
            .iter()
            .map(|s| s.tag())
            .collect();
        let jobs = self.jobs();
        let tables = exec::try_map(&jobs, |(sdg, src)| {
            let sets = tags
                .iter()
                .map(|tag| {
                    let path = responses.join(decoding::batch_file_name(*sdg, src, tag));
                    let texts: Vec<String> = decoding::read_responses(&path)?
                        .into_iter()
                        .map(|r| r.text)
                        .collect();
                    phrases::strategy_phrases(tag, &texts, fraction, mode)
                })
                .collect::<Result<Vec<_>>>()?;
            phrases::aggregate_strategies(*sdg, src, &sets)
        })?;
        for t in &tables {
            let path = t.write(&dir)?;
            log.artifact(&path)?;
            log.count(
                &format!("sdg{}.{}.phrases", t.sdg.get(), t.source_id),
                t.len(),
            );
        }
        for &sdg in &self.cfg.sdgs.clone() {
            if !self.only.has_sdg(sdg) {
                continue;
            }
            let all = self.all_tables(sdg)?;
            let refs: Vec<&PhraseTable> = all.iter().collect();
            let cu = phrases::common_unique_sets(&refs)?;
            log.write(&dir.join(cu.common_file_name()), cu.common_csv(&refs))?;
            log.count(&format!("sdg{}.common", sdg.get()), cu.common.len());
        }
        Ok(log)
    }

    fn all_tables(&self, sdg: Sdg) -> Result<Vec<PhraseTable>> {
        self.cfg
            .sources
            .iter()
            .map(|s| self.load_table(sdg, &s.id))
            .collect()
    }

    fn report(&mut self) -> Result<StageLog> {
        let mut log = StageLog::new(&self.out);
        let dir = self.dir("reports")?;
        let mut summary = String::from("sdg,source,phrases,common,unique\n");
        for &sdg in &self.cfg.sdgs.clone() {
            if !self.only.has_sdg(sdg) {
                continue;
            }
            let tables = self.all_tables(sdg)?;
            let refs: Vec<&PhraseTable> = tables.iter().collect();
            let cu: CommonUniqueSets = phrases::common_unique_sets(&refs)?;
            let k = sdg.get();
            let stem = dir.join(format!("common_sdg{k}"));
            let (svg, csv) = report::emit_frequency_chart(
                &format!("SDG {sdg}: phrases common to all sources"),
                &cu.common_counts(&refs),
                &stem,
            )?;
            log.artifact(&svg)?;
            log.artifact(&csv)?;
            for t in &tables {
                let stem = dir.join(format!("unique_sdg{k}.{}", t.source_id));
                let (svg, csv) = report::emit_frequency_chart(
                    &format!("SDG {sdg}: phrases unique to {}", t.source_id),
                    &cu.unique_counts(t),
                    &stem,
                )?;
                log.artifact(&svg)?;
                log.artifact(&csv)?;
                let _ = writeln!(
                    summary,
                    "{k},{},{},{},{}",
                    t.source_id,
                    t.len(),
                    cu.common.len(),
                    cu.unique[&t.source_id].len()
                );
            }
        }
        let name = if self.only.is_all() {
            "phrase_summary.csv".to_string()
        } else {
            "phrase_summary.partial.csv".to_string()
        };
        log.write(&dir.join(name), summary)?;
        Ok(log)
    }
}

/// Run all stages for `cfg`.
pub fn run_pipeline(cfg: RunConfig) -> Result<Manifest> {
    let mut p = Pipeline::open(cfg, Selection::default())?;
    p.run_all()?;
    Ok(p.manifest().clone())
}

/// Differences found when repeating a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayReport {
    /// Artifacts whose digest differs from the original run.
    pub changed: Vec<String>,
    /// Artifacts of the original run that the replay did not produce.
    pub missing: Vec<String>,
}

impl ReplayReport {
    pub fn is_identical(&self) -> bool {
        self.changed.is_empty() && self.missing.is_empty()
    }
}

/// Repeat the run a manifest describes, with inputs resolved against
/// `base_dir`, writing into `out_dir`. Inputs must still match the recorded
/// digests.
pub fn replay(manifest: &Manifest, base_dir: &Path, out_dir: &Path) -> Result<ReplayReport> {
    let mut cfg = manifest.config.clone();
    cfg.base_dir = base_dir.to_path_buf();
    cfg.output_dir = out_dir.to_path_buf();
    for (rel, digest) in &manifest.inputs {
        let actual = sha256_file(&cfg.resolve(Path::new(rel)))?;
        if &actual != digest {
            return Err(Error::Config(format!(
                "input {rel} changed since the recorded run"
            )));
        }
    }
    let again = run_pipeline(cfg)?;
    let new: BTreeMap<&str, &Artifact> = again.artifacts().collect();
    let mut report = ReplayReport::default();
    for (path, a) in manifest.artifacts() {
        match new.get(path) {
            Some(b) if b.sha256 == a.sha256 => {}
            Some(_) => report.changed.push(path.to_string()),
            None => report.missing.push(path.to_string()),
        }
    }
    Ok(report)
}
