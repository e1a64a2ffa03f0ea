//! Topic segmentation of a transcript's sentence sequence.
//!
//! Long transcripts are cut into overlapping chunks that fit a labeler's
//! token budget; each chunk is BIO-labeled independently and the labels are
//! merged back with earlier chunks taking priority on overlaps. The merged
//! labels are then turned into contiguous topic blocks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{normalize_terms, Sentence, Stopwords, TermVector, Transcript};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("invalid chunk budget: max_tokens {max_tokens}, stride {stride} (need max_tokens > stride > 0)")]
    InvalidBudget { max_tokens: usize, stride: usize },
    #[error("sentence {0} is not covered by any chunk")]
    CoverageGap(usize),
    #[error("chunk starting at {start} has {got} labels for {expected} sentences")]
    LabelLengthMismatch {
        start: usize,
        expected: usize,
        got: usize,
    },
    #[error("chunks are not in ascending start order")]
    UnorderedChunks,
    #[error("agreement needs two non-empty partitions")]
    EmptyPartition,
    #[error("segmenter backend failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BioLabel {
    B,
    I,
    O,
}

impl BioLabel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "B" | "b" => Some(Self::B),
            "I" | "i" => Some(Self::I),
            "O" | "o" => Some(Self::O),
            _ => None,
        }
    }
}

/// Half-open sentence range `[start, end)` fed to a labeler in one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
}

impl Chunk {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, sent: usize) -> bool {
        (self.start..self.end).contains(&sent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceLabeling {
    pub labels: Vec<BioLabel>,
}

/// A contiguous run `[start, end)` of global sentence indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start < end, "block must be non-empty");
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlap(&self, other: &Block) -> usize {
        self.end
            .min(other.end)
            .saturating_sub(self.start.max(other.start))
    }

    pub fn sentences<'a>(&self, all: &'a [Sentence]) -> &'a [Sentence] {
        &all[self.start..self.end]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
    /// Orphan `I` labels rewritten to `B` while building the partition.
    pub repairs: usize,
}

impl BlockPartition {
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Self { blocks, repairs: 0 }
    }

    /// Renders the partition back to one label per sentence.
    pub fn to_labels(&self, n_sentences: usize) -> SentenceLabeling {
        let mut labels = vec![BioLabel::O; n_sentences];
        for b in &self.blocks {
            labels[b.start] = BioLabel::B;
            for l in &mut labels[b.start + 1..b.end] {
                *l = BioLabel::I;
            }
        }
        SentenceLabeling { labels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub a_12: f64,
    pub a_21: f64,
    pub average: f64,
}

/// Cuts the sentence sequence into chunks of at most `max_tokens` tokens.
///
/// Chunk starts snap to sentence boundaries: the next chunk begins at the
/// first boundary lying at least `stride` tokens past the previous start.
/// Sentences longer than the budget are counted as `max_tokens` long.
pub fn chunk_sentences(
    sentences: &[Sentence],
    max_tokens: usize,
    stride: usize,
) -> Result<Vec<Chunk>, SegmentError> {
    let counts: Vec<usize> = sentences.iter().map(|s| s.token_count).collect();
    chunk_token_counts(&counts, max_tokens, stride)
}

/// [`chunk_sentences`] over bare per-sentence token counts.
pub fn chunk_token_counts(
    counts: &[usize],
    max_tokens: usize,
    stride: usize,
) -> Result<Vec<Chunk>, SegmentError> {
    if stride == 0 || stride >= max_tokens {
        return Err(SegmentError::InvalidBudget { max_tokens, stride });
    }
    let counts: Vec<usize> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c > max_tokens {
                log::warn!("sentence {i} has {c} tokens, truncating to {max_tokens}");
            }
            c.min(max_tokens)
        })
        .collect();
    let n = counts.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let total: usize = counts.iter().sum();
    if total <= max_tokens {
        return Ok(vec![Chunk {
            start: 0,
            end: n,
            token_count: total,
        }]);
    }

    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let mut end = start;
        let mut tokens = 0;
        while end < n && tokens + counts[end] <= max_tokens {
            tokens += counts[end];
            end += 1;
        }
        chunks.push(Chunk {
            start,
            end,
            token_count: tokens,
        });
        if end == n {
            break;
        }
        let mut next = start;
        let mut advanced = 0;
        while next < end && advanced < stride {
            advanced += counts[next];
            next += 1;
        }
        start = next.max(start + 1);
    }
    Ok(chunks)
}

/// Merges per-chunk labels; a sentence keeps the label of the earliest chunk
/// that contains it.
pub fn merge_chunk_labels(
    chunk_predictions: &[(Chunk, Vec<BioLabel>)],
) -> Result<SentenceLabeling, SegmentError> {
    let n = chunk_predictions
        .iter()
        .map(|(c, _)| c.end)
        .max()
        .unwrap_or(0);
    let mut merged: Vec<Option<BioLabel>> = vec![None; n];
    let mut prev_start = None;
    for (chunk, labels) in chunk_predictions {
        if prev_start.is_some_and(|p| chunk.start < p) {
            return Err(SegmentError::UnorderedChunks);
        }
        prev_start = Some(chunk.start);
        if labels.len() != chunk.len() {
            return Err(SegmentError::LabelLengthMismatch {
                start: chunk.start,
                expected: chunk.len(),
                got: labels.len(),
            });
        }
        for (slot, &label) in merged[chunk.start..chunk.end].iter_mut().zip(labels) {
            slot.get_or_insert(label);
        }
    }
    merged
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or(SegmentError::CoverageGap(i)))
        .collect::<Result<Vec<_>, _>>()
        .map(|labels| SentenceLabeling { labels })
}

/// Turns BIO labels into blocks. An `I` that does not follow `B` or `I` is
/// treated as `B` and counted in [`BlockPartition::repairs`].
pub fn labels_to_blocks(labeling: &SentenceLabeling) -> BlockPartition {
    let mut blocks = Vec::new();
    let mut repairs = 0;
    let mut open: Option<usize> = None;
    for (i, &label) in labeling.labels.iter().enumerate() {
        match label {
            BioLabel::B => {
                if let Some(s) = open.replace(i) {
                    blocks.push(Block::new(s, i));
                }
            }
            BioLabel::I => {
                if open.is_none() {
                    repairs += 1;
                    open = Some(i);
                }
            }
            BioLabel::O => {
                if let Some(s) = open.take() {
                    blocks.push(Block::new(s, i));
                }
            }
        }
    }
    if let Some(s) = open {
        blocks.push(Block::new(s, labeling.labels.len()));
    }
    BlockPartition { blocks, repairs }
}

/// Mean over `b1` blocks of the best fractional overlap with any `b2` block.
fn directed_agreement(b1: &BlockPartition, b2: &BlockPartition) -> f64 {
    let total: f64 = b1
        .blocks
        .iter()
        .map(|x| {
            let best = b2.blocks.iter().map(|y| x.overlap(y)).max().unwrap_or(0);
            best as f64 / x.len() as f64
        })
        .sum();
    total / b1.blocks.len() as f64
}

pub fn agreement_rate(
    b1: &BlockPartition,
    b2: &BlockPartition,
) -> Result<AgreementReport, SegmentError> {
    if b1.blocks.is_empty() || b2.blocks.is_empty() {
        return Err(SegmentError::EmptyPartition);
    }
    let a_12 = directed_agreement(b1, b2);
    let a_21 = directed_agreement(b2, b1);
    Ok(AgreementReport {
        a_12,
        a_21,
        average: (a_12 + a_21) / 2.0,
    })
}

/// Labels produced for one chunk of sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkLabels {
    pub labels: Vec<BioLabel>,
    /// Backend-specific boundary strength per inter-sentence gap (may be empty).
    pub boundary_scores: Vec<f64>,
}

/// Any sequence labeler mapping sentence texts to BIO labels.
pub trait SentenceLabeler: Send + Sync {
    fn label(&self, sentences: &[&str]) -> Result<ChunkLabels, SegmentError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentConfig {
    pub max_tokens: usize,
    pub stride: usize,
    /// Sentences per side of the cohesion window.
    pub window: usize,
    /// Boundary cutoff is `mean - k * stddev` of the depth scores.
    pub k: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            max_tokens: 4096,
            stride: 1024,
            window: 4,
            k: 0.5,
        }
    }
}

/// Lexical-cohesion labeler: compares term vectors of adjacent sentence
/// windows and cuts at pronounced dips in similarity.
#[derive(Debug, Clone)]
pub struct LexicalCohesion {
    pub window: usize,
    pub k: f64,
}

impl Default for LexicalCohesion {
    fn default() -> Self {
        let cfg = SegmentConfig::default();
        Self::new(cfg.window, cfg.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohesionProfile {
    /// Window cosine at gap `g`, which sits between sentences `g` and `g + 1`.
    pub gap_scores: Vec<f64>,
    pub depth_scores: Vec<f64>,
    /// Gaps chosen as topic boundaries.
    pub boundaries: Vec<usize>,
}

impl LexicalCohesion {
    pub fn new(window: usize, k: f64) -> Self {
        Self {
            window: window.max(1),
            k,
        }
    }

    pub fn profile(&self, vectors: &[TermVector]) -> CohesionProfile {
        let n = vectors.len();
        let w = self.window;
        let gap_scores: Vec<f64> = (1..n)
            .map(|i| {
                let left = sum_vectors(&vectors[i.saturating_sub(w)..i]);
                let right = sum_vectors(&vectors[i..(i + w).min(n)]);
                left.cosine(&right)
            })
            .collect();
        let depth_scores = depth_scores(&gap_scores);
        let boundaries = if n < 2 * w {
            Vec::new()
        } else {
            pick_boundaries(&depth_scores, self.k)
        };
        CohesionProfile {
            gap_scores,
            depth_scores,
            boundaries,
        }
    }

    fn label_vectors(&self, vectors: &[TermVector], near_empty: &[bool]) -> ChunkLabels {
        let n = vectors.len();
        let profile = self.profile(vectors);
        let mut segment_starts = vec![0];
        segment_starts.extend(profile.boundaries.iter().map(|g| g + 1));
        segment_starts.push(n);

        let mut labels = vec![BioLabel::I; n];
        for seg in segment_starts.windows(2) {
            let (mut lo, mut hi) = (seg[0], seg[1]);
            // Near-empty sentences at the edges of a segment fall outside it.
            while lo < hi && near_empty[lo] {
                labels[lo] = BioLabel::O;
                lo += 1;
            }
            while hi > lo && near_empty[hi - 1] {
                labels[hi - 1] = BioLabel::O;
                hi -= 1;
            }
            if lo < hi {
                labels[lo] = BioLabel::B;
            }
        }
        // A segment made only of near-empty sentences would leave nothing
        // to label; keep at least one block overall.
        if n > 0 && labels.iter().all(|&l| l == BioLabel::O) {
            labels[0] = BioLabel::B;
            for l in &mut labels[1..] {
                *l = BioLabel::I;
            }
        }
        ChunkLabels {
            labels,
            boundary_scores: profile.depth_scores,
        }
    }
}

fn sum_vectors(vs: &[TermVector]) -> TermVector {
    let mut acc = TermVector::default();
    for v in vs {
        acc.add_assign(v);
    }
    acc
}

/// Depth of each gap below the nearest peaks reached by climbing left and right.
fn depth_scores(scores: &[f64]) -> Vec<f64> {
    (0..scores.len())
        .map(|j| {
            let s = scores[j];
            let mut l = j;
            while l > 0 && scores[l - 1] >= scores[l] {
                l -= 1;
            }
            let mut r = j;
            while r + 1 < scores.len() && scores[r + 1] >= scores[r] {
                r += 1;
            }
            (scores[l] - s) + (scores[r] - s)
        })
        .collect()
}

/// Local depth maxima above `mean - k * stddev`; plateaus resolve leftmost.
fn pick_boundaries(depths: &[f64], k: f64) -> Vec<usize> {
    if depths.is_empty() {
        return Vec::new();
    }
    let m = depths.len() as f64;
    let mean = depths.iter().sum::<f64>() / m;
    let var = depths.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / m;
    let cutoff = mean - k * var.sqrt();
    (0..depths.len())
        .filter(|&j| {
            let d = depths[j];
            d > 0.0
                && d > cutoff
                && (j == 0 || d > depths[j - 1])
                && (j + 1 == depths.len() || d >= depths[j + 1])
        })
        .collect()
}

const NEAR_EMPTY_MAX_TOKENS: usize = 3;

fn is_near_empty(text: &str, terms_empty: bool) -> bool {
    terms_empty && crate::text::token_count(text) < NEAR_EMPTY_MAX_TOKENS
}

impl SentenceLabeler for LexicalCohesion {
    fn label(&self, sentences: &[&str]) -> Result<ChunkLabels, SegmentError> {
        let sw = Stopwords::english();
        let vectors: Vec<TermVector> = sentences
            .iter()
            .map(|s| normalize_terms(s, sw).counts)
            .collect();
        let near_empty: Vec<bool> = sentences
            .iter()
            .zip(&vectors)
            .map(|(s, v)| is_near_empty(s, v.is_empty()))
            .collect();
        Ok(self.label_vectors(&vectors, &near_empty))
    }
}

/// Runs the lexical-cohesion labeler over a whole transcript in one pass.
pub fn default_segmenter(transcript: &Transcript, cfg: &SegmentConfig) -> SentenceLabeling {
    let sentences = transcript.sentences();
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let labels = LexicalCohesion::new(cfg.window, cfg.k)
        .label(&texts)
        .map(|c| c.labels)
        .unwrap_or_default();
    SentenceLabeling { labels }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkReport {
    pub start: usize,
    pub end: usize,
    pub token_count: usize,
    pub boundary_scores: Vec<f64>,
}

/// Result of [`segment_sentences`], serialized as the segmentation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub chunks: Vec<ChunkReport>,
    pub labels: Vec<BioLabel>,
    pub blocks: Vec<Block>,
    pub repairs: usize,
}

impl Segmentation {
    pub fn partition(&self) -> BlockPartition {
        BlockPartition {
            blocks: self.blocks.clone(),
            repairs: self.repairs,
        }
    }
}

/// Chunk, label each chunk with `labeler`, merge, and build blocks.
pub fn segment_sentences(
    sentences: &[Sentence],
    labeler: &dyn SentenceLabeler,
    cfg: &SegmentConfig,
) -> Result<Segmentation, SegmentError> {
    let chunks = chunk_sentences(sentences, cfg.max_tokens, cfg.stride)?;
    let mut predictions = Vec::with_capacity(chunks.len());
    let mut reports = Vec::with_capacity(chunks.len());
    for chunk in &chunks {
        let texts: Vec<&str> = sentences[chunk.start..chunk.end]
            .iter()
            .map(|s| s.text.as_str())
            .collect();
        let out = labeler.label(&texts)?;
        reports.push(ChunkReport {
            start: chunk.start,
            end: chunk.end,
            token_count: chunk.token_count,
            boundary_scores: out.boundary_scores,
        });
        predictions.push((*chunk, out.labels));
    }
    let labeling = merge_chunk_labels(&predictions)?;
    let partition = labels_to_blocks(&labeling);
    Ok(Segmentation {
        chunks: reports,
        labels: labeling.labels,
        blocks: partition.blocks,
        repairs: partition.repairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_transcript;
    use proptest::prelude::*;
    use BioLabel::{B, I, O};

    fn labeling(labels: &[BioLabel]) -> SentenceLabeling {
        SentenceLabeling {
            labels: labels.to_vec(),
        }
    }

    #[test]
    fn under_budget_is_one_chunk() {
        let chunks = chunk_token_counts(&[5; 10], 4096, 1024).unwrap();
        assert_eq!(
            chunks,
            vec![Chunk {
                start: 0,
                end: 10,
                token_count: 50
            }]
        );
    }

    #[test]
    fn chunk_advance_snaps_to_sentence_boundaries() {
        let chunks = chunk_token_counts(&[400; 15], 4096, 1024).unwrap();
        let ranges: Vec<_> = chunks.iter().map(|c| (c.start, c.end)).collect();
        assert_eq!(ranges, vec![(0, 10), (3, 13), (6, 15)]);
        assert_eq!(chunks[0].token_count, 4000);
        assert_eq!(chunks[2].token_count, 3600);
    }

    #[test]
    fn invalid_budgets() {
        assert_eq!(
            chunk_token_counts(&[1], 4096, 4096),
            Err(SegmentError::InvalidBudget {
                max_tokens: 4096,
                stride: 4096
            })
        );
        assert!(chunk_token_counts(&[1], 10, 0).is_err());
    }

    #[test]
    fn oversized_sentence_is_capped() {
        let chunks = chunk_token_counts(&[5000, 10, 10], 4096, 1024).unwrap();
        assert_eq!(
            chunks[0],
            Chunk {
                start: 0,
                end: 1,
                token_count: 4096
            }
        );
        assert_eq!(chunks.last().unwrap().end, 3);
    }

    #[test]
    fn prior_chunk_wins_on_overlap() {
        let c1 = Chunk {
            start: 0,
            end: 10,
            token_count: 0,
        };
        let c2 = Chunk {
            start: 6,
            end: 15,
            token_count: 0,
        };
        let merged = merge_chunk_labels(&[(c1, vec![I; 10]), (c2, vec![B; 9])]).unwrap();
        assert!(merged.labels[..10].iter().all(|&l| l == I));
        assert!(merged.labels[10..].iter().all(|&l| l == B));
        assert_eq!(merged.labels.len(), 15);
    }

    #[test]
    fn single_chunk_merge_is_identity() {
        let c = Chunk {
            start: 0,
            end: 3,
            token_count: 0,
        };
        let merged = merge_chunk_labels(&[(c, vec![B, O, I])]).unwrap();
        assert_eq!(merged.labels, vec![B, O, I]);
    }

    #[test]
    fn merge_detects_gaps_and_bad_lengths() {
        let c1 = Chunk {
            start: 0,
            end: 5,
            token_count: 0,
        };
        let c2 = Chunk {
            start: 8,
            end: 12,
            token_count: 0,
        };
        assert_eq!(
            merge_chunk_labels(&[(c1, vec![B; 5]), (c2, vec![B; 4])]),
            Err(SegmentError::CoverageGap(5))
        );
        assert!(matches!(
            merge_chunk_labels(&[(c1, vec![B; 4])]),
            Err(SegmentError::LabelLengthMismatch { .. })
        ));
        assert_eq!(
            merge_chunk_labels(&[(c2, vec![B; 4]), (c1, vec![B; 5])]),
            Err(SegmentError::UnorderedChunks)
        );
    }

    #[test]
    fn bio_to_blocks() {
        let p = labels_to_blocks(&labeling(&[B, I, I, O, B, I]));
        assert_eq!(p.blocks, vec![Block::new(0, 3), Block::new(4, 6)]);
        assert_eq!(p.repairs, 0);

        let p = labels_to_blocks(&labeling(&[I, I]));
        assert_eq!(p.blocks, vec![Block::new(0, 2)]);
        assert_eq!(p.repairs, 1);

        assert!(labels_to_blocks(&labeling(&[O, O, O])).blocks.is_empty());
        let p = labels_to_blocks(&labeling(&[B, O, I, B]));
        assert_eq!(
            p.blocks,
            vec![Block::new(0, 1), Block::new(2, 3), Block::new(3, 4)]
        );
        assert_eq!(p.repairs, 1);
    }

    #[test]
    fn agreement_examples() {
        let b1 = BlockPartition::from_blocks(vec![Block::new(0, 4), Block::new(4, 8)]);
        let b2 = BlockPartition::from_blocks(vec![Block::new(0, 6), Block::new(6, 8)]);
        let r = agreement_rate(&b1, &b2).unwrap();
        assert!((r.a_12 - 0.75).abs() < 1e-12);
        // b2 -> b1: [0,6) best 4/6, [6,8) best 2/2.
        assert!((r.a_21 - (4.0 / 6.0 + 1.0) / 2.0).abs() < 1e-12);
        assert!((r.average - (r.a_12 + r.a_21) / 2.0).abs() < 1e-15);

        assert_eq!(agreement_rate(&b1, &b1).unwrap().average, 1.0);

        let d = BlockPartition::from_blocks(vec![Block::new(8, 12)]);
        assert_eq!(agreement_rate(&b1, &d).unwrap().average, 0.0);
        assert_eq!(
            agreement_rate(&b1, &BlockPartition::default()),
            Err(SegmentError::EmptyPartition)
        );
    }

    /// Brute-force window cosine and depth computation for the two-halves
    /// fixture, written directly over word sets.
    fn brute_force_boundary(sentences: &[&str], w: usize) -> usize {
        let bag = |range: std::ops::Range<usize>| {
            let mut m = std::collections::BTreeMap::<String, f64>::new();
            for s in &sentences[range] {
                for t in s.split_whitespace() {
                    *m.entry(t.trim_end_matches('.').to_lowercase()).or_default() += 1.0;
                }
            }
            m
        };
        let cos = |a: &std::collections::BTreeMap<String, f64>,
                   b: &std::collections::BTreeMap<String, f64>| {
            let dot: f64 = a.iter().map(|(k, v)| v * b.get(k).unwrap_or(&0.0)).sum();
            let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
            let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        let n = sentences.len();
        let scores: Vec<f64> = (1..n)
            .map(|i| cos(&bag(i.saturating_sub(w)..i), &bag(i..(i + w).min(n))))
            .collect();
        // The deepest valley wins; with two disjoint halves there is exactly one.
        let (gap, _) = scores
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        gap + 1
    }

    #[test]
    fn disjoint_halves_split_at_midpoint() {
        let a = "Budget planning covers salaries.";
        let b = "Database migration requires downtime.";
        let sentences = [a, a, a, a, b, b, b, b];
        let expected_start = brute_force_boundary(&sentences, 2);
        assert_eq!(expected_start, 4);

        let out = LexicalCohesion::new(2, 0.5).label(&sentences).unwrap();
        let p = labels_to_blocks(&labeling(&out.labels));
        assert_eq!(p.blocks, vec![Block::new(0, 4), Block::new(4, 8)]);
        assert_eq!(out.boundary_scores.len(), 7);
    }

    #[test]
    fn default_segmenter_fallbacks() {
        let t = parse_transcript("t", "(PERSON1) Only one sentence here.").unwrap();
        assert_eq!(
            default_segmenter(&t, &SegmentConfig::default()).labels,
            vec![B]
        );

        let raw = "(PERSON1) We review the budget numbers.\n".repeat(12);
        let t = parse_transcript("t", &raw).unwrap();
        let l = default_segmenter(&t, &SegmentConfig::default());
        assert_eq!(labels_to_blocks(&l).blocks, vec![Block::new(0, 12)]);
    }

    #[test]
    fn short_transcript_is_a_single_block() {
        let s = [
            "Budget talk.",
            "Budget again.",
            "Database work.",
            "Database more.",
        ];
        let out = LexicalCohesion::new(4, 0.5).label(&s).unwrap();
        assert_eq!(out.labels, vec![B, I, I, I]);
    }

    #[test]
    fn near_empty_edges_are_outside() {
        let s = [
            "Ok.",
            "Budget planning covers salaries.",
            "Budget review.",
            "Hm.",
        ];
        let out = LexicalCohesion::new(4, 0.5).label(&s).unwrap();
        assert_eq!(out.labels, vec![O, B, I, O]);
        let s = ["Budget planning.", "Ok.", "Budget review."];
        let out = LexicalCohesion::new(4, 0.5).label(&s).unwrap();
        assert_eq!(out.labels, vec![B, I, I]);
    }

    fn random_partition() -> impl Strategy<Value = BlockPartition> {
        proptest::collection::vec((1usize..6, any::<bool>()), 1..12).prop_map(|shape| {
            let mut blocks = Vec::new();
            let mut pos = 0;
            for (len, gap) in shape {
                if gap {
                    pos += 1;
                }
                blocks.push(Block::new(pos, pos + len));
                pos += len;
            }
            BlockPartition::from_blocks(blocks)
        })
    }

    proptest! {
        #[test]
        fn self_agreement_is_one(p in random_partition()) {
            prop_assert_eq!(agreement_rate(&p, &p).unwrap().average, 1.0);
        }

        #[test]
        fn agreement_is_scale_free(p in random_partition(), q in random_partition()) {
            let dup = |x: &BlockPartition| {
                BlockPartition::from_blocks(x.blocks.iter().flat_map(|b| [*b, *b]).collect())
            };
            let r = agreement_rate(&p, &q).unwrap();
            let rd = agreement_rate(&dup(&p), &dup(&q)).unwrap();
            prop_assert!((r.a_12 - rd.a_12).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.average));
        }

        #[test]
        fn blocks_round_trip_through_labels(p in random_partition()) {
            let n = p.blocks.last().unwrap().end + 1;
            let back = labels_to_blocks(&p.to_labels(n));
            prop_assert_eq!(back.repairs, 0);
            prop_assert_eq!(back.blocks, p.blocks);
        }

        #[test]
        fn merge_labels_every_sentence_once(
            counts in proptest::collection::vec(1usize..120, 1..200),
        ) {
            let chunks = chunk_token_counts(&counts, 512, 128).unwrap();
            prop_assert_eq!(chunks[0].start, 0);
            prop_assert_eq!(chunks.last().unwrap().end, counts.len());
            for c in &chunks {
                prop_assert!(c.token_count <= 512);
            }
            let preds: Vec<_> = chunks
                .iter()
                .enumerate()
                .map(|(i, c)| (*c, vec![if i % 2 == 0 { B } else { I }; c.len()]))
                .collect();
            let merged = merge_chunk_labels(&preds).unwrap();
            prop_assert_eq!(merged.labels.len(), counts.len());
            for (s, &l) in merged.labels.iter().enumerate() {
                let first = chunks.iter().position(|c| c.contains(s)).unwrap();
                prop_assert_eq!(l, preds[first].1[0]);
            }
        }
    }
}
