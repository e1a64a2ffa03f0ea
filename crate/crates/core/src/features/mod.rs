//! Pair features for relevance classification.
//!
//! The vector has eight dimensions in a fixed order, see
//! [`FEATURE_NAMES`].

pub mod dates;
pub mod entities;
pub mod semsim;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minuteparse::{parse_minute, LineLabel};
use crate::text::{normalize_terms, parse_transcript, Stopwords, TermVector};
use crate::{Document, DocumentKind};

pub use dates::{date_consistency, find_date, parse_date, DateMatch, DateStamp};
pub use entities::{extract_entities, ne_overlap, EntityExtractor, NamedEntitySet};
pub use semsim::{chunked_semantic_similarity, ExactMatch, HashedTrigram, TokenSimilarity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit idf weights on an empty corpus")]
    EmptyCorpus,
    #[error("chunk count must be at least 1, got {0}")]
    InvalidN(usize),
}

/// Transcript utterances scanned for a date.
pub const DATE_SCAN_UTTERANCES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub weights: BTreeMap<String, f64>,
    pub doc_count: usize,
    pub default_weight: f64,
}

impl IdfTable {
    pub fn weight(&self, term: &str) -> f64 {
        self.weights
            .get(term)
            .copied()
            .unwrap_or(self.default_weight)
    }

    /// Term counts scaled by idf.
    pub fn weigh(&self, counts: &TermVector) -> TermVector {
        TermVector(
            counts
                .0
                .iter()
                .map(|(t, c)| (t.clone(), c * self.weight(t)))
                .collect(),
        )
    }
}

/// Smoothed idf over `corpus`.
pub fn fit_idf(corpus: &[Document]) -> Result<IdfTable, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let stop = Stopwords::english();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        for term in normalize_terms(&doc.content(), stop).set {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let weights = df
        .into_iter()
        .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
        .collect();
    Ok(IdfTable {
        weights,
        doc_count: corpus.len(),
        default_weight: (1.0 + n).ln() + 1.0,
    })
}

pub fn tfidf_cosine_text(t1: &str, t2: &str, idf: &IdfTable) -> f64 {
    let stop = Stopwords::english();
    let v1 = idf.weigh(&normalize_terms(t1, stop).counts);
    let v2 = idf.weigh(&normalize_terms(t2, stop).counts);
    v1.cosine(&v2)
}

pub fn tfidf_cosine(d1: &Document, d2: &Document, idf: &IdfTable) -> f64 {
    tfidf_cosine_text(&d1.content(), &d2.content(), idf)
}

/// Vocabulary Jaccard after term normalization; 0 for two empty vocabularies.
pub fn jaccard_text(t1: &str, t2: &str) -> f64 {
    let stop = Stopwords::english();
    let v1 = normalize_terms(t1, stop).set;
    let v2 = normalize_terms(t2, stop).set;
    let union = v1.union(&v2).count();
    if union == 0 {
        return 0.0;
    }
    v1.intersection(&v2).count() as f64 / union as f64
}

pub fn jaccard(d1: &Document, d2: &Document) -> f64 {
    jaccard_text(&d1.content(), &d2.content())
}

/// A minute's date comes from its parsed date line; a transcript's from
/// its opening utterances.
pub fn extract_date(doc: &Document) -> Option<DateStamp> {
    match doc.kind {
        DocumentKind::Minute => parse_minute(&doc.raw)
            .tree
            .field(LineLabel::Date)
            .and_then(parse_date),
        DocumentKind::Transcript => match parse_transcript(&doc.id, &doc.raw) {
            Ok(t) => t
                .utterances
                .iter()
                .take(DATE_SCAN_UTTERANCES)
                .find_map(|u| parse_date(&u.text)),
            Err(_) => doc
                .raw
                .lines()
                .take(DATE_SCAN_UTTERANCES)
                .find_map(parse_date),
        },
    }
}

pub const FEATURE_NAMES: [&str; 8] = [
    "tfidf_cos",
    "jaccard",
    "ne_overlap",
    "date_year",
    "date_month",
    "date_day",
    "date_hour",
    "semsim",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 8]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Chunk count for the semantic similarity.
    pub n: usize,
    /// Entity tags beyond PERSON, PROJECT and ORGANIZATION.
    pub entity_tags: Vec<String>,
    pub embedder: HashedTrigram,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n: 4,
            entity_tags: Vec::new(),
            embedder: HashedTrigram::default(),
        }
    }
}

/// All eight features with the configured trigram embedder.
pub fn build_feature_vector(
    d1: &Document,
    d2: &Document,
    idf: &IdfTable,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    build_feature_vector_with(d1, d2, idf, cfg, &cfg.embedder)
}

pub fn build_feature_vector_with(
    d1: &Document,
    d2: &Document,
    idf: &IdfTable,
    cfg: &FeatureConfig,
    sim: &dyn TokenSimilarity,
) -> Result<FeatureVector, FeatureError> {
    let (c1, c2) = (d1.content(), d2.content());
    let ex = EntityExtractor::new(&cfg.entity_tags);
    let semsim = chunked_semantic_similarity(&c1, &c2, cfg.n, sim)?;
    let (e1, e2) = (ex.extract(&d1.raw), ex.extract(&d2.raw));
    let (t1, t2) = (extract_date(d1), extract_date(d2));
    let dates = date_consistency(t1.as_ref(), t2.as_ref());
    Ok(FeatureVector([
        tfidf_cosine_text(&c1, &c2, idf),
        jaccard_text(&c1, &c2),
        ne_overlap(&e1, &e2),
        dates[0],
        dates[1],
        dates[2],
        dates[3],
        semsim,
    ]))
}
