//! Chunked greedy token matching between two documents.

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::text::{normalize_token, tokens};

/// Pairwise token similarity in [0, 1].
pub trait TokenSimilarity: Send + Sync {
    /// `out[i][j]` is the similarity of `a[i]` and `b[j]`.
    fn similarity_matrix(&self, a: &[String], b: &[String]) -> Vec<Vec<f64>>;
}

/// 1 for identical tokens, else 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl TokenSimilarity for ExactMatch {
    fn similarity_matrix(&self, a: &[String], b: &[String]) -> Vec<Vec<f64>> {
        a.iter()
            .map(|x| b.iter().map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect()
    }
}

/// Cosine of L2-normalized hashed character-trigram counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashedTrigram {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashedTrigram {
    fn default() -> Self {
        Self {
            dim: 1024,
            seed: 0x5eed,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl HashedTrigram {
    /// Sparse unit vector as sorted `(bucket, weight)` pairs.
    pub fn embed(&self, token: &str) -> Vec<(usize, f64)> {
        let padded: Vec<char> = format!("#{token}#").chars().collect();
        let mut counts = std::collections::BTreeMap::new();
        for w in padded.windows(3) {
            let gram: String = w.iter().collect();
            let bucket = (fnv1a(self.seed, gram.as_bytes()) % self.dim.max(1) as u64) as usize;
            *counts.entry(bucket).or_insert(0.0) += 1.0;
        }
        let norm = counts.values().map(|c: &f64| c * c).sum::<f64>().sqrt();
        counts
            .into_iter()
            .map(|(k, c)| (k, if norm > 0.0 { c / norm } else { 0.0 }))
            .collect()
    }
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

impl TokenSimilarity for HashedTrigram {
    fn similarity_matrix(&self, a: &[String], b: &[String]) -> Vec<Vec<f64>> {
        let eb: Vec<_> = b.iter().map(|t| self.embed(t)).collect();
        a.iter()
            .map(|x| {
                let ex = self.embed(x);
                eb.iter()
                    .zip(b)
                    .map(|(e, y)| {
                        if x == y {
                            1.0
                        } else {
                            sparse_dot(&ex, e).clamp(0.0, 1.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Lowercased tokens with punctuation removed; empty ones dropped.
pub fn semsim_tokens(text: &str) -> Vec<String> {
    tokens(text)
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

/// `n` contiguous chunks of near-equal size, remainder to earlier chunks.
pub fn split_chunks<T>(items: &[T], n: usize) -> Vec<&[T]> {
    let base = items.len() / n;
    let extra = items.len() % n;
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        out.push(&items[start..start + len]);
        start += len;
    }
    out
}

/// Harmonic mean of greedy-matching precision and recall; 0 if either
/// side is empty.
pub fn chunk_score(a: &[String], b: &[String], sim: &dyn TokenSimilarity) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let m = sim.similarity_matrix(a, b);
    let recall = m
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / a.len() as f64;
    let precision = (0..b.len())
        .map(|j| m.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / b.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-chunk scores `s(i)` for `i` in `0..n`.
pub fn chunk_scores(
    d1: &str,
    d2: &str,
    n: usize,
    sim: &dyn TokenSimilarity,
) -> Result<Vec<f64>, FeatureError> {
    if n < 1 {
        return Err(FeatureError::InvalidN(n));
    }
    let (t1, t2) = (semsim_tokens(d1), semsim_tokens(d2));
    Ok(split_chunks(&t1, n)
        .into_iter()
        .zip(split_chunks(&t2, n))
        .map(|(a, b)| chunk_score(a, b, sim))
        .collect())
}

/// Mean of the per-chunk scores.
pub fn chunked_semantic_similarity(
    d1: &str,
    d2: &str,
    n: usize,
    sim: &dyn TokenSimilarity,
) -> Result<f64, FeatureError> {
    let scores = chunk_scores(d1, d2, n, sim)?;
    Ok((scores.iter().sum::<f64>() / n as f64).clamp(0.0, 1.0))
}
