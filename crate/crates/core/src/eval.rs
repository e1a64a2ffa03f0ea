//! ROUGE-N, ROUGE-L and Pearson correlation.
//!
//! Tokens are lowercased with punctuation removed; no stemming and no
//! stopword removal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalize_token, tokens};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("at least one reference is required")]
    NoReferences,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("{left} values against {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation needs two or more points with non-zero variance")]
    DegenerateInput,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(matches: usize, cand: usize, refr: usize) -> Self {
        let precision = if cand == 0 {
            0.0
        } else {
            matches as f64 / cand as f64
        };
        let recall = if refr == 0 {
            0.0
        } else {
            matches as f64 / refr as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

pub fn rouge_tokens(text: &str) -> Vec<String> {
    tokens(text)
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

fn ngram_counts(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    for g in toks.windows(n) {
        *out.entry(g).or_insert(0) += 1;
    }
    out
}

/// Clipped n-gram overlap.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Result<RougeScore, EvalError> {
    if n < 1 {
        return Err(EvalError::InvalidOrder);
    }
    let (c, r) = (rouge_tokens(candidate), rouge_tokens(reference));
    let (cc, rc) = (ngram_counts(&c, n), ngram_counts(&r, n));
    let matches = cc
        .iter()
        .map(|(g, k)| (*k).min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    let total = |m: &HashMap<&[String], usize>| m.values().sum::<usize>();
    Ok(RougeScore::from_counts(matches, total(&cc), total(&rc)))
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Longest common subsequence over the token sequences.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    let (c, r) = (rouge_tokens(candidate), rouge_tokens(reference));
    RougeScore::from_counts(lcs_len(&c, &r), c.len(), r.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefAggregation {
    Average,
    /// The full triple of the reference with the best f1 (first on ties).
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeMetric {
    Rouge1,
    Rouge2,
    RougeL,
}

impl RougeMetric {
    pub const ALL: [RougeMetric; 3] = [Self::Rouge1, Self::Rouge2, Self::RougeL];

    pub fn score(self, candidate: &str, reference: &str) -> RougeScore {
        match self {
            Self::Rouge1 => rouge_n(candidate, reference, 1).expect("order 1"),
            Self::Rouge2 => rouge_n(candidate, reference, 2).expect("order 2"),
            Self::RougeL => rouge_l(candidate, reference),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Rouge1 => "rouge1",
            Self::Rouge2 => "rouge2",
            Self::RougeL => "rougeL",
        }
    }
}

pub fn aggregate_scores(
    scores: &[RougeScore],
    mode: RefAggregation,
) -> Result<RougeScore, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::NoReferences);
    }
    Ok(match mode {
        RefAggregation::Average => {
            let n = scores.len() as f64;
            RougeScore {
                precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
                recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
                f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
            }
        }
        RefAggregation::Max => *scores
            .iter()
            .reduce(|best, s| if s.f1 > best.f1 { s } else { best })
            .expect("non-empty"),
    })
}

pub fn aggregate_over_refs(
    candidate: &str,
    refs: &[&str],
    metric: RougeMetric,
    mode: RefAggregation,
) -> Result<RougeScore, EvalError> {
    let scores: Vec<RougeScore> = refs.iter().map(|r| metric.score(candidate, r)).collect();
    aggregate_scores(&scores, mode)
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(EvalError::DegenerateInput);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::DegenerateInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
