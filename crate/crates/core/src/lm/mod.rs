//! Language models behind a small adapter interface.
//!
//! The built-in backend is a smoothed word n-gram model. Anything that can
//! produce a next-token distribution over a [`Vocabulary`] and a unit
//! representation per token can drive the decoders.

mod io;
mod ngram;
pub mod repr;
pub mod vocab;

pub use ngram::{LmConfig, NgramModel, Smoothing, DEFAULT_REP_SEED};
pub use repr::{cosine, Representations};
pub use vocab::{detokenize, tokenize, TokenId, Vocabulary, BOS_ID, EOS_ID, UNK_ID};

use crate::error::{Error, Result};

pub trait LmAdapter: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Probability of every vocabulary id after `context`.
    fn next_token_dist(&self, context: &[TokenId]) -> Vec<f64>;

    /// Unit-norm representation of `token`.
    fn representation(&self, token: TokenId) -> &[f64];
}

/// Uniform over the whole vocabulary. Reference point for perplexity.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocabulary,
    reps: Representations,
}

impl UniformModel {
    pub fn new(vocab: Vocabulary, dim: usize) -> Self {
        let reps = repr::build(&[], vocab.len(), dim.max(1), 0, DEFAULT_REP_SEED);
        Self { vocab, reps }
    }
}

impl LmAdapter for UniformModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_token_dist(&self, _context: &[TokenId]) -> Vec<f64> {
        vec![1.0 / self.vocab.len() as f64; self.vocab.len()]
    }

    fn representation(&self, token: TokenId) -> &[f64] {
        self.reps.row(token.min(self.vocab.len() as TokenId - 1))
    }
}

/// `(1 - lambda) * primary + lambda * base`, over a shared vocabulary.
/// Representations come from the primary model.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    primary: NgramModel,
    base: NgramModel,
    lambda: f64,
}

impl MixtureModel {
    pub fn new(primary: NgramModel, base: NgramModel, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!(
                "mixture weight {lambda} outside [0, 1]"
            )));
        }
        if primary.vocab() != base.vocab() {
            return Err(Error::Config(
                "mixture components must share a vocabulary".into(),
            ));
        }
        Ok(Self {
            primary,
            base,
            lambda,
        })
    }

    pub fn primary(&self) -> &NgramModel {
        &self.primary
    }
}

impl LmAdapter for MixtureModel {
    fn vocab(&self) -> &Vocabulary {
        self.primary.vocab()
    }

    fn next_token_dist(&self, context: &[TokenId]) -> Vec<f64> {
        let mut p = self.primary.next_token_dist(context);
        if self.lambda > 0.0 {
            let b = self.base.next_token_dist(context);
            for (x, y) in p.iter_mut().zip(b) {
                *x = (1.0 - self.lambda) * *x + self.lambda * y;
            }
        }
        p
    }

    fn representation(&self, token: TokenId) -> &[f64] {
        self.primary.representation(token)
    }
}

/// `exp(-mean ln p)` over every token of every document plus its `<eos>`.
/// Infinite if any token has probability zero; NaN for an empty corpus.
pub fn perplexity<S: AsRef<str>>(model: &dyn LmAdapter, docs: &[Vec<S>]) -> f64 {
    let vocab = model.vocab();
    let mut nll = 0.0;
    let mut n = 0usize;
    for doc in docs {
        let mut ids = vocab.encode(doc);
        ids.push(EOS_ID);
        for i in 0..ids.len() {
            let p = model.next_token_dist(&ids[..i])[ids[i] as usize];
            if p <= 0.0 {
                return f64::INFINITY;
            }
            nll -= p.ln();
            n += 1;
        }
    }
    (nll / n as f64).exp()
}
