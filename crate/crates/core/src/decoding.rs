//! Top-k, nucleus and contrastive decoding, plus the prompt harness.
//!
//! Candidate orderings are by descending probability with ties broken by
//! lower token id. Sampling draws one uniform `f64` per step from a
//! ChaCha8 stream and walks the renormalized cumulative mass.
//!
//! Each response gets its own RNG, seeded from the first 8 bytes
//! (little-endian) of SHA-256 over
//! `run_seed (u64 LE) | sdg (u8) | source_id | strategy tag | prompt_id (u64 LE) | repeat (u64 LE)`,
//! strings length-prefixed with a `u32`. Output therefore does not depend
//! on execution order.

use std::cmp::Ordering;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::Sdg;
use crate::error::{Error, Result};
use crate::exec;
use crate::lm::{cosine, detokenize, tokenize, LmAdapter, TokenId, BOS_ID, EOS_ID, UNK_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    TopK { k: usize },
    Nucleus { p: f64 },
    Contrastive { k: usize, alpha: f64 },
}

impl Strategy {
    /// Short name used in file names and seed derivation.
    pub fn tag(&self) -> &'static str {
        match self {
            Strategy::TopK { .. } => "top_k",
            Strategy::Nucleus { .. } => "nucleus",
            Strategy::Contrastive { .. } => "contrastive",
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Strategy::Contrastive { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Strategy::TopK { k } => k >= 1,
            Strategy::Nucleus { p } => p > 0.0 && p <= 1.0,
            Strategy::Contrastive { k, alpha } => k >= 1 && (0.0..=1.0).contains(&alpha),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "strategy parameters out of range: {self}"
            )))
        }
    }

    /// The three strategies with their default parameters.
    pub fn defaults() -> Vec<Strategy> {
        vec![
            Strategy::TopK { k: 50 },
            Strategy::Nucleus { p: 0.95 },
            Strategy::Contrastive { k: 8, alpha: 0.6 },
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::TopK { k } => write!(f, "top_k:{k}"),
            Strategy::Nucleus { p } => write!(f, "nucleus:{p}"),
            Strategy::Contrastive { k, alpha } => write!(f, "contrastive:{k}:{alpha}"),
        }
    }
}

/// `top_k[:k]`, `nucleus[:p]` (alias `top_p`), `contrastive[:k[:alpha]]`.
impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(':').map(str::trim);
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = || Error::Config(format!("bad strategy spec {s:?}"));
        let int = |i: usize, d: usize| -> Result<usize> {
            args.get(i).map_or(Ok(d), |a| a.parse().map_err(|_| bad()))
        };
        let real = |i: usize, d: f64| -> Result<f64> {
            args.get(i).map_or(Ok(d), |a| a.parse().map_err(|_| bad()))
        };
        let (st, max_args) = match name {
            "top_k" | "topk" | "top-k" => (Strategy::TopK { k: int(0, 50)? }, 1),
            "nucleus" | "top_p" | "top-p" => (Strategy::Nucleus { p: real(0, 0.95)? }, 1),
            "contrastive" => (
                Strategy::Contrastive {
                    k: int(0, 8)?,
                    alpha: real(1, 0.6)?,
                },
                2,
            ),
            _ => return Err(bad()),
        };
        if args.len() > max_args {
            return Err(bad());
        }
        st.validate()?;
        Ok(st)
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub strategy: Strategy,
    pub max_tokens: usize,
    pub seed: u64,
}

impl DecodingConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            max_tokens: 128,
            seed: 0,
        }
    }
}

/// Token ids ordered by descending probability, ties by lower id.
pub fn ranked(dist: &[f64]) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = (0..dist.len() as TokenId).collect();
    ids.sort_unstable_by(|&a, &b| by_prob(dist, a, b));
    ids
}

fn by_prob(dist: &[f64], a: TokenId, b: TokenId) -> Ordering {
    dist[b as usize]
        .partial_cmp(&dist[a as usize])
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// The `k` most probable ids in ranked order.
pub fn top_k_set(dist: &[f64], k: usize) -> Vec<TokenId> {
    let k = k.clamp(1, dist.len());
    let mut ids: Vec<TokenId> = (0..dist.len() as TokenId).collect();
    if k < ids.len() {
        ids.select_nth_unstable_by(k - 1, |&a, &b| by_prob(dist, a, b));
        ids.truncate(k);
    }
    ids.sort_unstable_by(|&a, &b| by_prob(dist, a, b));
    ids
}

/// Smallest ranked prefix whose mass reaches `p`; the whole ranking if the
/// mass never does (rounding).
pub fn nucleus_set(dist: &[f64], p: f64) -> Vec<TokenId> {
    let ranked = ranked(dist);
    let mut cum = 0.0;
    for (i, &id) in ranked.iter().enumerate() {
        cum += dist[id as usize];
        if cum >= p {
            return ranked[..=i].to_vec();
        }
    }
    ranked
}

/// Draw from `support` proportionally to `dist`.
pub fn sample_from<R: Rng + ?Sized>(dist: &[f64], support: &[TokenId], rng: &mut R) -> TokenId {
    let total: f64 = support.iter().map(|&i| dist[i as usize]).sum();
    let u = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for &id in support {
        cum += dist[id as usize];
        if u < cum {
            return id;
        }
    }
    // u landed on the rounding gap at the top; take the last positive entry.
    support
        .iter()
        .rev()
        .copied()
        .find(|&i| dist[i as usize] > 0.0)
        .unwrap_or(support[0])
}

pub fn top_k_step<R: Rng + ?Sized>(dist: &[f64], k: usize, rng: &mut R) -> TokenId {
    sample_from(dist, &top_k_set(dist, k), rng)
}

pub fn nucleus_step<R: Rng + ?Sized>(dist: &[f64], p: f64, rng: &mut R) -> TokenId {
    sample_from(dist, &nucleus_set(dist, p), rng)
}

/// `(1 - alpha) * prob - alpha * max_sim`, maximized; ties to lower id.
/// Candidates are `(id, prob, max_sim)`.
pub fn contrastive_choose(candidates: &[(TokenId, f64, f64)], alpha: f64) -> TokenId {
    let mut best: Option<(TokenId, f64)> = None;
    for &(id, p, sim) in candidates {
        let score = (1.0 - alpha) * p - alpha * sim;
        best = match best {
            Some((bid, bs)) if bs > score || (bs == score && bid < id) => Some((bid, bs)),
            _ => Some((id, score)),
        };
    }
    best.expect("at least one candidate").0
}

/// Contrastive pick over the top-k of `dist`, penalizing similarity to any
/// token in `context`.
pub fn contrastive_from_dist(
    model: &dyn LmAdapter,
    dist: &[f64],
    context: &[TokenId],
    k: usize,
    alpha: f64,
) -> TokenId {
    let candidates: Vec<(TokenId, f64, f64)> = top_k_set(dist, k)
        .into_iter()
        .map(|id| {
            let rep = model.representation(id);
            let sim = if alpha == 0.0 {
                0.0
            } else {
                context
                    .iter()
                    .map(|&c| cosine(rep, model.representation(c)))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            (
                id,
                dist[id as usize],
                if sim.is_finite() { sim } else { 0.0 },
            )
        })
        .collect();
    contrastive_choose(&candidates, alpha)
}

pub fn contrastive_step(
    model: &dyn LmAdapter,
    context: &[TokenId],
    k: usize,
    alpha: f64,
) -> TokenId {
    let dist = decodable_dist(model, context);
    contrastive_from_dist(model, &dist, context, k, alpha)
}

/// The model distribution with `<bos>` and `<unk>` removed and the rest
/// renormalized, so responses only contain real words and `<eos>`.
fn decodable_dist(model: &dyn LmAdapter, context: &[TokenId]) -> Vec<f64> {
    let mut dist = model.next_token_dist(context);
    dist[BOS_ID as usize] = 0.0;
    if let Some(p) = dist.get_mut(UNK_ID as usize) {
        *p = 0.0;
    }
    let total: f64 = dist.iter().sum();
    if total > 0.0 {
        for p in dist.iter_mut() {
            *p /= total;
        }
    } else {
        dist[EOS_ID as usize] = 1.0;
    }
    dist
}

/// Identifies one response for seed derivation.
#[derive(Debug, Clone, Copy)]
pub struct ResponseKey<'a> {
    pub run_seed: u64,
    pub sdg: Sdg,
    pub source_id: &'a str,
    pub strategy: &'a str,
    pub prompt_id: usize,
    pub repeat: usize,
}

impl ResponseKey<'_> {
    pub fn seed(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(self.run_seed.to_le_bytes());
        h.update([self.sdg.get()]);
        for s in [self.source_id, self.strategy] {
            h.update((s.len() as u32).to_le_bytes());
            h.update(s.as_bytes());
        }
        h.update((self.prompt_id as u64).to_le_bytes());
        h.update((self.repeat as u64).to_le_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub prompt_id: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub repeat: usize,
    pub strategy: String,
    /// Generated tokens, ending in `<eos>` unless `max_tokens` was hit.
    pub tokens: Vec<String>,
    /// Detokenized response without the prompt and without `<eos>`.
    pub text: String,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// Decode one response. The context starts as `<bos>` plus the prompt
/// tokens; the prompt itself is not part of the response.
pub fn generate_response(
    model: &dyn LmAdapter,
    prompt: &str,
    strategy: Strategy,
    max_tokens: usize,
    seed: u64,
) -> Result<(Vec<String>, String)> {
    let prompt_tokens = tokenize(prompt);
    if prompt_tokens.is_empty() {
        return Err(Error::Generation("empty prompt".into()));
    }
    let vocab = model.vocab();
    let mut context = vec![BOS_ID];
    context.extend(vocab.encode(&prompt_tokens));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<TokenId> = Vec::new();
    while out.len() < max_tokens {
        let dist = decodable_dist(model, &context);
        let next = match strategy {
            Strategy::TopK { k } => top_k_step(&dist, k, &mut rng),
            Strategy::Nucleus { p } => nucleus_step(&dist, p, &mut rng),
            Strategy::Contrastive { k, alpha } => {
                contrastive_from_dist(model, &dist, &context, k, alpha)
            }
        };
        out.push(next);
        if next == EOS_ID {
            break;
        }
        context.push(next);
    }
    let tokens: Vec<String> = out.iter().map(|&id| vocab.token(id).to_string()).collect();
    let words: Vec<&str> = out
        .iter()
        .filter(|&&id| id != EOS_ID)
        .map(|&id| vocab.token(id))
        .collect();
    Ok((tokens, detokenize(&words)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    /// 1-based line number in the prompt file.
    pub id: usize,
    pub text: String,
}

/// One prompt per line; blank lines are skipped but still count for ids.
pub fn parse_prompts(text: &str) -> Vec<Prompt> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Prompt {
            id: i + 1,
            text: l.trim().to_string(),
        })
        .collect()
}

pub fn read_prompts(path: &Path) -> Result<Vec<Prompt>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let prompts = parse_prompts(&text);
    if prompts.is_empty() {
        return Err(Error::Generation(format!(
            "no prompts in {}",
            path.display()
        )));
    }
    Ok(prompts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationBatch {
    pub sdg: Sdg,
    pub source_id: String,
    pub strategy: String,
    pub responses: Vec<Response>,
}

impl GenerationBatch {
    pub fn file_name(&self) -> String {
        batch_file_name(self.sdg, &self.source_id, &self.strategy)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.responses {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(self.file_name());
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn batch_file_name(sdg: Sdg, source_id: &str, strategy: &str) -> String {
    format!("sdg{}.{source_id}.{strategy}.jsonl", sdg.get())
}

pub fn read_responses(path: &Path) -> Result<Vec<Response>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// One response per prompt and repeat, generated in parallel.
pub fn generate_batch(
    model: &dyn LmAdapter,
    prompts: &[Prompt],
    sdg: Sdg,
    source_id: &str,
    cfg: &DecodingConfig,
    repeats: usize,
) -> Result<GenerationBatch> {
    cfg.strategy.validate()?;
    let tag = cfg.strategy.tag();
    let jobs: Vec<(&Prompt, usize)> = prompts
        .iter()
        .flat_map(|p| (0..repeats.max(1)).map(move |r| (p, r)))
        .collect();
    let responses = exec::try_map(&jobs, |&(p, repeat)| {
        let key = ResponseKey {
            run_seed: cfg.seed,
            sdg,
            source_id,
            strategy: tag,
            prompt_id: p.id,
            repeat,
        };
        let (tokens, text) =
            generate_response(model, &p.text, cfg.strategy, cfg.max_tokens, key.seed())?;
        Ok::<_, Error>(Response {
            prompt_id: p.id,
            repeat,
            strategy: tag.to_string(),
            tokens,
            text,
        })
    })?;
    Ok(GenerationBatch {
        sdg,
        source_id: source_id.to_string(),
        strategy: tag.to_string(),
        responses,
    })
}
