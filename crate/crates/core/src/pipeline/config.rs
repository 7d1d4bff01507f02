use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::Sdg;
use crate::corpus::{FieldMap, InputFormat, JoinConfig};
use crate::decoding::Strategy;
use crate::error::{Error, Result};
use crate::lm::{LmConfig, Smoothing, DEFAULT_REP_SEED};
use crate::phrases::CountMode;

/// How a source assigns publications to SDGs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleConfig {
    /// `doi,sdg` rows.
    Labels { path: PathBuf },
    /// `doi,sdg,score` rows; kept when the score is above `threshold`.
    Score {
        path: PathBuf,
        #[serde(default = "default_score_threshold")]
        threshold: f64,
    },
    /// One `sdg<k>.query` file per SDG in `dir`.
    Query { dir: PathBuf },
}

fn default_score_threshold() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<InputFormat>,
    #[serde(default)]
    pub schema: FieldMap,
    pub rule: RuleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSection {
    pub order: usize,
    pub smoothing: Smoothing,
    pub rep_dim: usize,
    pub rep_window: usize,
    pub rep_seed: u64,
    /// Weight of a base model trained on the whole joint index. Zero trains
    /// each model from scratch on its subset only.
    pub base_lambda: f64,
}

impl Default for LmSection {
    fn default() -> Self {
        let d = LmConfig::default();
        Self {
            order: d.order,
            smoothing: d.smoothing,
            rep_dim: d.rep_dim,
            rep_window: d.rep_window,
            rep_seed: DEFAULT_REP_SEED,
            base_lambda: 0.0,
        }
    }
}

impl LmSection {
    pub fn lm_config(&self) -> LmConfig {
        LmConfig {
            order: self.order,
            smoothing: self.smoothing,
            rep_dim: self.rep_dim,
            rep_window: self.rep_window,
            rep_seed: self.rep_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodingSection {
    pub strategies: Vec<Strategy>,
    pub max_tokens: usize,
    /// Responses per prompt and strategy.
    pub repeats: usize,
}

impl Default for DecodingSection {
    fn default() -> Self {
        Self {
            strategies: Strategy::defaults(),
            max_tokens: 128,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_seed: u64,
    /// Not echoed into the manifest, so runs differing only in where they
    /// write produce identical manifests.
    #[serde(default, skip_serializing)]
    pub output_dir: PathBuf,
    pub sdgs: Vec<Sdg>,
    #[serde(default = "default_year_window")]
    pub year_window: (i32, i32),
    #[serde(default = "yes")]
    pub require_unique: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub count_mode: CountMode,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub lm: LmSection,
    #[serde(default)]
    pub decoding: DecodingSection,
    /// Prompt file per SDG, keyed by SDG number.
    pub prompts: BTreeMap<String, PathBuf>,
    pub sources: Vec<SourceConfig>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_year_window() -> (i32, i32) {
    JoinConfig::default().year_window
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.10
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::from_toml_str(&text, &base)
    }

    pub fn to_toml(&self) -> Result<String> {
        let mut v = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = v.as_table_mut() {
            t.insert(
                "output_dir".into(),
                toml::Value::String(self.output_dir.to_string_lossy().into_owned()),
            );
        }
        toml::to_string(&v).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn join_config(&self) -> JoinConfig {
        JoinConfig {
            year_window: self.year_window,
            require_unique: self.require_unique,
        }
    }

    pub fn prompt_path(&self, sdg: Sdg) -> Result<PathBuf> {
        self.prompts
            .get(&sdg.get().to_string())
            .map(|p| self.resolve(p))
            .ok_or_else(|| Error::Config(format!("no prompt file for SDG {sdg}")))
    }

    pub fn source_ids(&self) -> Vec<String> {
        self.sources.iter().map(|s| s.id.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir is required".into());
        }
        if self.sources.len() < 2 {
            return bad(format!(
                "need at least two sources, got {}",
                self.sources.len()
            ));
        }
        let mut ids = BTreeSet::new();
        for s in &self.sources {
            if !valid_id(&s.id) {
                return bad(format!("source id {:?} must be [A-Za-z0-9_-]+", s.id));
            }
            if !ids.insert(&s.id) {
                return bad(format!("duplicate source id {}", s.id));
            }
            if let RuleConfig::Score { threshold, .. } = s.rule {
                if !(0.0..=1.0).contains(&threshold) {
                    return bad(format!(
                        "score threshold {threshold} for {} outside [0, 1]",
                        s.id
                    ));
                }
            }
        }
        if self.sdgs.is_empty() {
            return bad("need at least one SDG".into());
        }
        if self.sdgs.iter().collect::<BTreeSet<_>>().len() != self.sdgs.len() {
            return bad("duplicate SDG in sdgs".into());
        }
        for key in self.prompts.keys() {
            let sdg = Sdg::parse(key)?;
            if !self.sdgs.contains(&sdg) {
                return bad(format!(
                    "prompt file given for SDG {sdg}, which is not in sdgs"
                ));
            }
        }
        for &sdg in &self.sdgs {
            self.prompt_path(sdg)?;
        }
        if self.year_window.0 > self.year_window.1 {
            return bad(format!("empty year window {:?}", self.year_window));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if !(0.0..=1.0).contains(&self.lm.base_lambda) {
            return bad(format!(
                "base_lambda {} outside [0, 1]",
                self.lm.base_lambda
            ));
        }
        self.lm.lm_config().validate()?;
        let d = &self.decoding;
        if d.strategies.is_empty() {
            return bad("need at least one decoding strategy".into());
        }
        let mut tags = BTreeSet::new();
        for s in &d.strategies {
            s.validate()?;
            if !tags.insert(s.tag()) {
                return bad(format!("strategy {} listed twice", s.tag()));
            }
        }
        if d.max_tokens == 0 || d.repeats == 0 {
            return bad("max_tokens and repeats must be positive".into());
        }
        Ok(())
    }
}
