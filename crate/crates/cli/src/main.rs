use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sdgdiv_core::classify::{self, Sdg, SdgSubset};
use sdgdiv_core::corpus::JointIndex;
use sdgdiv_core::decoding::{self, DecodingConfig, Strategy};
use sdgdiv_core::lm::{tokenize, LmAdapter, NgramModel, Smoothing};
use sdgdiv_core::phrases::{self, CountMode, PhraseTable};
use sdgdiv_core::pipeline::{self, Manifest, Pipeline, RunConfig, Selection};
use sdgdiv_core::query::parse_query;
use sdgdiv_core::synth::{self, SynthSpec};

#[derive(Parser)]
#[command(
    name = "sdgdiv",
    version,
    about = "Compare SDG classifications across bibliometric sources"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict per-SDG stages, e.g. `sdg=5,source=openalex`.
    #[arg(long, global = true)]
    only: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Read and normalize every source.
    Ingest,
    /// Build the joint index.
    Join,
    /// Build per-SDG subsets for every source, or one subset with the flags below.
    Classify(ClassifyArgs),
    /// Venn partitions and overlap reports.
    Overlap,
    /// Train one model per SDG and source, or a single model with the flags below.
    Train(TrainArgs),
    /// Generate responses for every model, or for a single model with the flags below.
    Generate(GenerateArgs),
    /// Extract noun phrases from responses.
    Analyze(AnalyzeArgs),
    /// Common and unique phrase charts.
    Report,
    /// Every stage in order.
    Run,
    /// Check that the artifacts in a manifest still match their digests.
    Verify {
        /// Output directory holding manifest.json; defaults to the config's.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Repeat the run recorded in a manifest and compare every artifact.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory that input paths in the manifest are relative to.
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic three-source corpus with a ready-to-run config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        prompts: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4u8, 5, 8, 9, 10])]
        sdgs: Vec<u8>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mechanism {
    Label,
    Score,
    Query,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, requires_all = ["source", "mechanism", "input"])]
    sdg: Option<u8>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long, value_enum)]
    mechanism: Option<Mechanism>,
    /// Label or score file, or a query file.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = classify::DEFAULT_SCORE_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, requires_all = ["source", "out"])]
    sdg: Option<u8>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    /// `add_k:<k>`, `kneser_ney:<d>` or `none`.
    #[arg(long)]
    smoothing: Option<Smoothing>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, requires_all = ["prompts", "strategy", "out"])]
    model: Option<PathBuf>,
    /// One prompt per line; the line number is the prompt id.
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// `top_k:<k>`, `nucleus:<p>` or `contrastive:<k>:<alpha>`.
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    max_tokens: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directories of `sdg<k>.<source>.<strategy>.jsonl` files.
    #[arg(long = "responses", requires = "out")]
    responses: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.10)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "response")]
    count: CountArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountArg {
    Response,
    Occurrence,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let Some(path) = &cli.config else {
        bail!("--config is required for this command");
    };
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn selection(cli: &Cli) -> Result<Selection> {
    Ok(match &cli.only {
        Some(s) => Selection::parse(s)?,
        None => Selection::default(),
    })
}

fn stage(cli: &Cli, name: &str) -> Result<()> {
    let mut p = Pipeline::open(load_config(cli)?, selection(cli)?)?;
    p.run_stage(name)?;
    println!("{name}: ok ({})", p.output_dir().display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Ingest => stage(&cli, "ingest"),
        Cmd::Join => stage(&cli, "join"),
        Cmd::Overlap => stage(&cli, "overlap"),
        Cmd::Report => stage(&cli, "report"),
        Cmd::Classify(a) if a.sdg.is_some() => classify_one(&cli, a),
        Cmd::Classify(_) => stage(&cli, "classify"),
        Cmd::Train(a) if a.sdg.is_some() => train_one(&cli, a),
        Cmd::Train(_) => stage(&cli, "train"),
        Cmd::Generate(a) if a.model.is_some() => generate_one(a),
        Cmd::Generate(_) => stage(&cli, "generate"),
        Cmd::Analyze(a) if !a.responses.is_empty() => analyze_dirs(a),
        Cmd::Analyze(_) => stage(&cli, "analyze"),
        Cmd::Run => {
            let cfg = load_config(&cli)?;
            let mut p = Pipeline::open(cfg, selection(&cli)?)?;
            let m = p.run_all()?;
            println!(
                "run: {} models, {} responses ({})",
                m.count("train", "models").unwrap_or(0),
                m.count("generate", "responses").unwrap_or(0),
                p.output_dir().display()
            );
            Ok(())
        }
        Cmd::Verify { dir } => {
            let dir = match dir {
                Some(d) => d.clone(),
                None => load_config(&cli)?.output(),
            };
            let m = Manifest::load(&dir)?;
            let bad = m.verify(&dir);
            if !bad.is_empty() {
                bail!("{} artifacts do not match: {}", bad.len(), bad.join(", "));
            }
            println!("verify: {} artifacts ok", m.artifacts().count());
            Ok(())
        }
        Cmd::Replay {
            manifest,
            base,
            out,
        } => {
            let text = std::fs::read_to_string(manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let m: Manifest = serde_json::from_str(&text)?;
            let r = pipeline::replay(&m, base, out)?;
            if !r.is_identical() {
                bail!(
                    "replay differs: changed {:?}, missing {:?}",
                    r.changed,
                    r.missing
                );
            }
            println!("replay: identical");
            Ok(())
        }
        Cmd::Synth {
            out,
            prompts,
            sdgs,
            seed,
        } => {
            let spec = SynthSpec {
                sdgs: sdgs.clone(),
                prompts_per_sdg: *prompts,
                seed: *seed,
                ..SynthSpec::default()
            };
            let c = synth::write_synthetic(out, &spec)?;
            println!("{}", c.config_path.display());
            Ok(())
        }
    }
}

fn index_for(cfg: &RunConfig) -> Result<JointIndex> {
    let dir = cfg.output().join("index");
    JointIndex::load(&dir).with_context(|| {
        format!(
            "loading the joint index from {}; run `join` first",
            dir.display()
        )
    })
}

fn classify_one(cli: &Cli, a: &ClassifyArgs) -> Result<()> {
    let cfg = load_config(cli)?;
    let index = index_for(&cfg)?;
    let sdg = Sdg::new(a.sdg.expect("checked by caller"))?;
    let source = a.source.as_deref().expect("required by clap");
    let input = a.input.as_deref().expect("required by clap");
    let sdgs = [sdg];
    let subset = match a.mechanism.expect("required by clap") {
        Mechanism::Label => {
            let f = classify::read_labels(input)?;
            classify::classify_by_labels(&index, source, &f, &sdgs)
                .subsets
                .remove(&sdg)
        }
        Mechanism::Score => {
            let f = classify::read_scores(input)?;
            classify::classify_by_score(&index, source, &f, a.threshold, &sdgs)?
                .subsets
                .remove(&sdg)
        }
        Mechanism::Query => {
            let text = std::fs::read_to_string(input)
                .with_context(|| format!("reading {}", input.display()))?;
            let ast = parse_query(&text).with_context(|| input.display().to_string())?;
            Some(classify::classify_by_query(&index, source, sdg, &ast)?)
        }
    }
    .expect("one subset per requested SDG");
    let dir = cfg.output().join("subsets");
    std::fs::create_dir_all(&dir)?;
    let path = subset.save(&dir)?;
    println!("{} DOIs -> {}", subset.len(), path.display());
    Ok(())
}

fn train_one(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let cfg = load_config(cli)?;
    let index = index_for(&cfg)?;
    let sdg = Sdg::new(a.sdg.expect("checked by caller"))?;
    let source = a.source.as_deref().expect("required by clap");
    let subset = SdgSubset::load(&index, sdg, source, &cfg.output().join("subsets"))?;
    let mut lm = cfg.lm.lm_config();
    if let Some(n) = a.order {
        lm.order = n;
    }
    if let Some(s) = a.smoothing {
        lm.smoothing = s;
    }
    let docs: Vec<Vec<String>> = subset
        .dois()
        .iter()
        .filter_map(|d| index.record(d, source))
        .map(|r| tokenize(&r.abstract_text))
        .collect();
    let model = NgramModel::train_tokens(&docs, &lm, None)?
        .with_meta("sdg", sdg.get().to_string())
        .with_meta("source", source);
    let out = a.out.as_deref().expect("required by clap");
    model.save(out)?;
    println!("trained on {} abstracts -> {}", docs.len(), out.display());
    Ok(())
}

fn generate_one(a: &GenerateArgs) -> Result<()> {
    let path = a.model.as_deref().expect("checked by caller");
    let model = NgramModel::load(path)?;
    let sdg = match model.meta.get("sdg") {
        Some(s) => Sdg::parse(s)?,
        None => bail!("{} has no `sdg` metadata", path.display()),
    };
    let source = model
        .meta
        .get("source")
        .cloned()
        .with_context(|| format!("{} has no `source` metadata", path.display()))?;
    let prompts = decoding::read_prompts(a.prompts.as_deref().expect("required by clap"))?;
    let cfg = DecodingConfig {
        strategy: a.strategy.expect("required by clap"),
        max_tokens: a.max_tokens,
        seed: a.seed,
    };
    cfg.strategy.validate()?;
    let model: Arc<dyn LmAdapter> = Arc::new(model);
    let batch = decoding::generate_batch(model.as_ref(), &prompts, sdg, &source, &cfg, a.repeats)?;
    let out = a.out.as_deref().expect("required by clap");
    std::fs::create_dir_all(out)?;
    let written = batch.write(out)?;
    println!(
        "{} responses -> {}",
        batch.responses.len(),
        written.display()
    );
    Ok(())
}

/// `sdg<k>.<source>.<strategy>.jsonl`
fn parse_batch_name(name: &str) -> Option<(Sdg, String, String)> {
    let stem = name.strip_suffix(".jsonl")?;
    let mut parts = stem.splitn(3, '.');
    let sdg = Sdg::parse(parts.next()?.strip_prefix("sdg")?).ok()?;
    Some((sdg, parts.next()?.to_string(), parts.next()?.to_string()))
}

fn analyze_dirs(a: &AnalyzeArgs) -> Result<()> {
    let mode = match a.count {
        CountArg::Response => CountMode::Response,
        CountArg::Occurrence => CountMode::Occurrence,
    };
    let mut groups: BTreeMap<(Sdg, String), Vec<(String, PathBuf)>> = BTreeMap::new();
    for dir in &a.responses {
        for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
            let path = entry?.path();
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            if let Some((sdg, src, tag)) = parse_batch_name(name) {
                groups.entry((sdg, src)).or_default().push((tag, path));
            }
        }
    }
    if groups.is_empty() {
        bail!("no response files found");
    }
    let out = a.out.as_deref().expect("required by clap");
    std::fs::create_dir_all(out)?;
    let mut tables: BTreeMap<Sdg, Vec<PhraseTable>> = BTreeMap::new();
    for ((sdg, src), mut files) in groups {
        files.sort();
        let sets = files
            .iter()
            .map(|(tag, path)| {
                let texts: Vec<String> = decoding::read_responses(path)?
                    .into_iter()
                    .map(|r| r.text)
                    .collect();
                phrases::strategy_phrases(tag, &texts, a.threshold, mode)
            })
            .collect::<sdgdiv_core::Result<Vec<_>>>()?;
        let table = phrases::aggregate_strategies(sdg, &src, &sets)?;
        println!("{}", table.write(out)?.display());
        tables.entry(sdg).or_default().push(table);
    }
    for tables in tables.values() {
        if tables.len() < 2 {
            continue;
        }
        let refs: Vec<&PhraseTable> = tables.iter().collect();
        let cu = phrases::common_unique_sets(&refs)?;
        let path = out.join(cu.common_file_name());
        std::fs::write(&path, cu.common_csv(&refs))?;
        println!("{}", path.display());
    }
    Ok(())
}
