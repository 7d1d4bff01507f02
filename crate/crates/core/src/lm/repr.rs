//! Token representations for similarity scoring.
//!
//! Rows are PPMI-weighted token–context co-occurrence vectors (symmetric
//! window) projected to `dim` dimensions by a fixed-seed Rademacher matrix,
//! then L2-normalized. A token without co-occurrences gets its own
//! projection row, so every token has a unit vector.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct Representations {
    dim: usize,
    data: Vec<f64>,
}

impl Representations {
    pub fn from_raw(dim: usize, data: Vec<f64>) -> Option<Self> {
        (dim > 0 && data.len().is_multiple_of(dim)).then_some(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, id: TokenId) -> &[f64] {
        let i = id as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn projection(vocab_size: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    (0..vocab_size * dim)
        .map(|_| if rng.gen::<bool>() { scale } else { -scale })
        .collect()
}

/// Build representations from encoded documents.
pub fn build(
    docs: &[Vec<TokenId>],
    vocab_size: usize,
    dim: usize,
    window: usize,
    seed: u64,
) -> Representations {
    let mut cooc: Vec<BTreeMap<TokenId, f64>> = vec![BTreeMap::new(); vocab_size];
    for doc in docs {
        for (i, &w) in doc.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(doc.len().saturating_sub(1));
            for (j, &c) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    *cooc[w as usize].entry(c).or_default() += 1.0;
                }
            }
        }
    }
    let row_sums: Vec<f64> = cooc.iter().map(|r| r.values().sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let proj = projection(vocab_size, dim, seed);

    let mut data = vec![0.0; vocab_size * dim];
    for (w, row) in cooc.iter().enumerate() {
        let out = &mut data[w * dim..(w + 1) * dim];
        for (&c, &n) in row {
            // Co-occurrence is symmetric, so column sums equal row sums.
            let pmi = (n * total / (row_sums[w] * row_sums[c as usize])).ln();
            if pmi > 0.0 {
                let p = &proj[c as usize * dim..(c as usize + 1) * dim];
                for (o, x) in out.iter_mut().zip(p) {
                    *o += pmi * x;
                }
            }
        }
        let mut norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            out.copy_from_slice(&proj[w * dim..(w + 1) * dim]);
            norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        for o in out.iter_mut() {
            *o /= norm;
        }
    }
    Representations { dim, data }
}
