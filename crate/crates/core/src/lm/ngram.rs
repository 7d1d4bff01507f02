use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::repr::{self, Representations};
use super::vocab::{tokenize, TokenId, Vocabulary, BOS_ID, EOS_ID};
use super::LmAdapter;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Smoothing {
    /// Add-k over the continuation set (vocabulary minus `<bos>`), backing
    /// off to the longest seen context. `k = 0` is the unsmoothed estimate.
    AddK { k: f64 },
    /// Interpolated Kneser-Ney with a fixed absolute discount.
    KneserNey { discount: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddK { k: 0.01 }
    }
}

impl Smoothing {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Smoothing::AddK { k } if k.is_finite() && k >= 0.0 => Ok(()),
            Smoothing::KneserNey { discount } if discount > 0.0 && discount <= 1.0 => Ok(()),
            _ => Err(Error::Config(format!("invalid smoothing {self}"))),
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::AddK { k } => write!(f, "add_k:{k}"),
            Smoothing::KneserNey { discount } => write!(f, "kneser_ney:{discount}"),
        }
    }
}

/// Parses `add_k[:k]`, `none`, `kneser_ney[:discount]` (alias `kn`).
impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.as_str(), None),
        };
        let num = |default: f64| -> Result<f64> {
            arg.map_or(Ok(default), |a| {
                a.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad smoothing parameter {a:?}")))
            })
        };
        let sm = match name {
            "add_k" | "addk" | "add-k" => Smoothing::AddK { k: num(0.01)? },
            "none" | "mle" => Smoothing::AddK { k: 0.0 },
            "kneser_ney" | "kn" | "kneser-ney" => Smoothing::KneserNey {
                discount: num(0.75)?,
            },
            other => return Err(Error::Config(format!("unknown smoothing `{other}`"))),
        };
        sm.validate()?;
        Ok(sm)
    }
}

impl TryFrom<String> for Smoothing {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Smoothing> for String {
    fn from(s: Smoothing) -> String {
        s.to_string()
    }
}

pub const DEFAULT_REP_SEED: u64 = 0x005e_ed0f_c00c_c05e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
    pub rep_dim: usize,
    pub rep_window: usize,
    pub rep_seed: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            order: 3,
            smoothing: Smoothing::default(),
            rep_dim: 64,
            rep_window: 2,
            rep_seed: DEFAULT_REP_SEED,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > 8 {
            return Err(Error::Config(format!(
                "n-gram order must be 1..=8, got {}",
                self.order
            )));
        }
        if self.rep_dim == 0 {
            return Err(Error::Config(
                "representation dimension must be positive".into(),
            ));
        }
        self.smoothing.validate()
    }
}

/// Counts for one context.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Row {
    pub(crate) counts: BTreeMap<TokenId, u64>,
    pub(crate) total: u64,
}

impl Row {
    fn add(&mut self, tok: TokenId, n: u64) {
        *self.counts.entry(tok).or_default() += n;
        self.total += n;
    }
}

pub(crate) type Table = BTreeMap<Vec<TokenId>, Row>;

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub(crate) order: usize,
    pub(crate) smoothing: Smoothing,
    pub(crate) vocab: Vocabulary,
    /// `tables[h]` maps contexts of length `h` to next-token counts.
    pub(crate) tables: Vec<Table>,
    /// Kneser-Ney continuation counts for the lower orders, derived from
    /// `tables` and not serialized.
    pub(crate) continuation: Vec<Table>,
    pub(crate) reps: Representations,
    pub(crate) rep_window: u32,
    pub(crate) rep_seed: u64,
    /// Free-form labels such as the SDG and source a model was trained for.
    pub meta: BTreeMap<String, String>,
}

impl NgramModel {
    /// Train on raw texts; the vocabulary is built from the corpus.
    pub fn train<S: AsRef<str>>(texts: &[S], cfg: &LmConfig) -> Result<Self> {
        let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t.as_ref())).collect();
        Self::train_tokens(&docs, cfg, None)
    }

    /// Train on tokenized documents, optionally over a fixed vocabulary
    /// (unknown tokens map to `<unk>`).
    pub fn train_tokens<S: AsRef<str>>(
        docs: &[Vec<S>],
        cfg: &LmConfig,
        vocab: Option<Vocabulary>,
    ) -> Result<Self> {
        cfg.validate()?;
        if docs.iter().all(|d| d.is_empty()) {
            return Err(Error::Training("training corpus has no tokens".into()));
        }
        let vocab = vocab.unwrap_or_else(|| Vocabulary::from_corpus(docs));
        if !vocab.is_valid() {
            return Err(Error::Training("vocabulary lacks reserved tokens".into()));
        }
        let encoded: Vec<Vec<TokenId>> = docs
            .iter()
            .filter(|d| !d.is_empty())
            .map(|d| vocab.encode(d))
            .collect();
        let n = cfg.order;
        let mut tables: Vec<Table> = vec![Table::new(); n];
        for doc in &encoded {
            let mut padded = vec![BOS_ID; n - 1];
            padded.extend_from_slice(doc);
            padded.push(EOS_ID);
            for i in (n - 1)..padded.len() {
                let target = padded[i];
                for (h, table) in tables.iter_mut().enumerate() {
                    table
                        .entry(padded[i - h..i].to_vec())
                        .or_default()
                        .add(target, 1);
                }
            }
        }
        let reps = repr::build(
            &encoded,
            vocab.len(),
            cfg.rep_dim,
            cfg.rep_window,
            cfg.rep_seed,
        );
        Ok(Self::assemble(
            n,
            cfg.smoothing,
            vocab,
            tables,
            reps,
            cfg.rep_window as u32,
            cfg.rep_seed,
            BTreeMap::new(),
        ))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        order: usize,
        smoothing: Smoothing,
        vocab: Vocabulary,
        tables: Vec<Table>,
        reps: Representations,
        rep_window: u32,
        rep_seed: u64,
        meta: BTreeMap<String, String>,
    ) -> Self {
        let continuation = continuation_tables(&tables);
        Self {
            order,
            smoothing,
            vocab,
            tables,
            continuation,
            reps,
            rep_window,
            rep_seed,
            meta,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn representations(&self) -> &Representations {
        &self.reps
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Count of `token` after `context` (exact context length).
    pub fn count(&self, context: &[TokenId], token: TokenId) -> u64 {
        self.tables
            .get(context.len())
            .and_then(|t| t.get(context))
            .and_then(|r| r.counts.get(&token))
            .copied()
            .unwrap_or(0)
    }

    /// The last `order - 1` tokens of `history`, left-padded with `<bos>`.
    fn context_window(&self, history: &[TokenId]) -> Vec<TokenId> {
        let h = self.order - 1;
        let mut ctx = vec![BOS_ID; h.saturating_sub(history.len())];
        ctx.extend_from_slice(&history[history.len().saturating_sub(h)..]);
        ctx
    }

    /// Next-token distribution after `history`, over the full vocabulary.
    pub fn distribution(&self, history: &[TokenId]) -> Vec<f64> {
        let ctx = self.context_window(history);
        match self.smoothing {
            Smoothing::AddK { k } => self.add_k_dist(&ctx, k),
            Smoothing::KneserNey { discount } => self.kn_dist(&ctx, discount),
        }
    }

    /// Probabilities for string tokens.
    pub fn distribution_for(&self, history: &[&str]) -> Vec<f64> {
        self.distribution(&self.vocab.encode(history))
    }

    fn add_k_dist(&self, ctx: &[TokenId], k: f64) -> Vec<f64> {
        let v = self.vocab.len();
        let c = self.vocab.continuation_size() as f64;
        let row = (0..=ctx.len())
            .rev()
            .find_map(|h| {
                self.tables[h]
                    .get(&ctx[ctx.len() - h..])
                    .filter(|r| r.total > 0)
            })
            .expect("unigram row exists for a trained model");
        let denom = row.total as f64 + k * c;
        let mut dist = vec![k / denom; v];
        dist[BOS_ID as usize] = 0.0;
        for (&tok, &n) in &row.counts {
            dist[tok as usize] = (n as f64 + k) / denom;
        }
        dist
    }

    fn kn_dist(&self, ctx: &[TokenId], discount: f64) -> Vec<f64> {
        let v = self.vocab.len();
        let c = self.vocab.continuation_size() as f64;
        let mut dist = vec![1.0 / c; v];
        dist[BOS_ID as usize] = 0.0;
        let top = self.order - 1;
        for h in 0..=top {
            let table = if h == top {
                &self.tables[h]
            } else {
                &self.continuation[h]
            };
            let Some(row) = table.get(&ctx[ctx.len() - h..]) else {
                continue;
            };
            if row.total == 0 {
                continue;
            }
            let total = row.total as f64;
            let backoff = discount * row.counts.len() as f64 / total;
            for p in dist.iter_mut() {
                *p *= backoff;
            }
            for (&tok, &n) in &row.counts {
                dist[tok as usize] += (n as f64 - discount).max(0.0) / total;
            }
        }
        dist
    }
}

/// `cont[h][ctx][w]` = number of distinct `x` with `(x, ctx, w)` seen, for
/// `h` below the top order.
fn continuation_tables(tables: &[Table]) -> Vec<Table> {
    let n = tables.len();
    let mut cont: Vec<Table> = vec![Table::new(); n.saturating_sub(1)];
    for h in 0..n.saturating_sub(1) {
        for (ctx, row) in &tables[h + 1] {
            let lower = ctx[1..].to_vec();
            let entry = cont[h].entry(lower).or_default();
            for &tok in row.counts.keys() {
                entry.add(tok, 1);
            }
        }
    }
    cont
}

impl LmAdapter for NgramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_dist(&self, context: &[TokenId]) -> Vec<f64> {
        self.distribution(context)
    }

    fn representation(&self, token: TokenId) -> &[f64] {
        let id = if (token as usize) < self.vocab.len() {
            token
        } else {
            super::vocab::UNK_ID
        };
        self.reps.row(id)
    }
}
