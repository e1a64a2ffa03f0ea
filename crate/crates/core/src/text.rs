//! Shared domain types and text plumbing: transcript ingestion, sentence
//! splitting, whitespace tokenization and term normalization.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");
const ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

/// Shortest and longest (in characters) term kept by [`normalize_terms`].
pub const MIN_TERM_CHARS: usize = 3;
pub const MAX_TERM_CHARS: usize = 14;

static UTTERANCE_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\(([A-Z][A-Z_]*[0-9]+)\)\s*(.*)$").unwrap());

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("transcript contains no utterances")]
    EmptyTranscript,
    #[error("line {line}: continuation text before the first speaker tag")]
    LeadingContinuation { line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: String,
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub utterance_index: usize,
    pub sent_index: usize,
    pub token_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Transcript,
    Minute,
}

/// A raw input document for pair classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub kind: DocumentKind,
    pub raw: String,
}

impl Document {
    pub fn new(id: impl Into<String>, kind: DocumentKind, raw: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            raw: raw.into(),
        }
    }

    /// The text that similarity features look at. Transcripts lose their
    /// speaker tags; a transcript that does not parse is used verbatim.
    pub fn content(&self) -> String {
        match self.kind {
            DocumentKind::Minute => self.raw.clone(),
            DocumentKind::Transcript => match parse_transcript(&self.id, &self.raw) {
                Ok(t) => t
                    .utterances
                    .iter()
                    .map(|u| u.text.as_str())
                    .collect::<Vec<_>>()
                    .join("\n"),
                Err(_) => self.raw.clone(),
            },
        }
    }
}

/// Parses `(SPEAKER1) text` lines. Lines without a tag continue the
/// previous utterance.
pub fn parse_transcript(id: &str, raw: &str) -> Result<Transcript, TextError> {
    let mut utterances: Vec<Utterance> = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(caps) = UTTERANCE_LINE.captures(line) {
            utterances.push(Utterance {
                speaker: caps[1].to_string(),
                text: caps[2].trim().to_string(),
                index: 0,
            });
        } else {
            let prev = utterances
                .last_mut()
                .ok_or(TextError::LeadingContinuation { line: lineno + 1 })?;
            if !prev.text.is_empty() {
                prev.text.push(' ');
            }
            prev.text.push_str(line.trim());
        }
    }
    utterances.retain(|u| !u.text.is_empty());
    if utterances.is_empty() {
        return Err(TextError::EmptyTranscript);
    }
    for (i, u) in utterances.iter_mut().enumerate() {
        u.index = i;
    }
    Ok(Transcript {
        id: id.to_string(),
        utterances,
        language: "en".to_string(),
    })
}

impl Transcript {
    /// Splits every utterance into sentences with global, ascending indices.
    pub fn sentences(&self) -> Vec<Sentence> {
        let mut out = Vec::new();
        for u in &self.utterances {
            for text in split_sentences(&u.text) {
                out.push(Sentence {
                    token_count: token_count(&text),
                    sent_index: out.len(),
                    utterance_index: u.index,
                    text,
                });
            }
        }
        out
    }

    /// Distinct speaker tags in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.utterances
            .iter()
            .map(|u| u.speaker.as_str())
            .filter(|s| seen.insert(*s))
            .collect()
    }
}

/// Whitespace tokens. Every token budget in the crate is counted with this.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

pub fn token_count(text: &str) -> usize {
    tokens(text).count()
}

/// Rule-based sentence splitter guarded by an abbreviation list.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

static DEFAULT_SPLITTER: LazyLock<SentenceSplitter> =
    LazyLock::new(|| SentenceSplitter::from_list(ABBREVIATIONS));

impl SentenceSplitter {
    /// One abbreviation per line, including its trailing period.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { abbreviations }
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if matches!(c, '.' | '?' | '!') {
                // Closing quotes and brackets stay with the sentence.
                let mut end = i + 1;
                while end < chars.len()
                    && matches!(chars[end].1, '"' | '\'' | ')' | ']' | '\u{201d}')
                {
                    end += 1;
                }
                let mut next = end;
                while next < chars.len() && chars[next].1.is_whitespace() {
                    next += 1;
                }
                let opens_sentence = next > end
                    && next < chars.len()
                    && (chars[next].1.is_uppercase() || chars[next].1.is_ascii_digit());
                if opens_sentence && !(c == '.' && self.is_abbreviation(text, start, pos)) {
                    let cut = chars.get(end).map_or(text.len(), |&(p, _)| p);
                    let piece = text[start..cut].trim();
                    if !piece.is_empty() {
                        out.push(piece.to_string());
                    }
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            i += 1;
        }
        let rest = text[start..].trim();
        if !rest.is_empty() {
            out.push(rest.to_string());
        }
        out
    }

    fn is_abbreviation(&self, text: &str, start: usize, period: usize) -> bool {
        let word_start = text[start..period]
            .rfind(char::is_whitespace)
            .map_or(start, |p| start + p + 1);
        let word = text[word_start..=period]
            .trim_start_matches(['(', '"', '\''])
            .to_lowercase();
        self.abbreviations.contains(&word)
    }
}

/// Splits with the bundled abbreviation list.
pub fn split_sentences(text: &str) -> Vec<String> {
    DEFAULT_SPLITTER.split(text)
}

pub type TermSet = BTreeSet<String>;

/// Sparse term weights with deterministic iteration order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermVector(pub BTreeMap<String, f64>);

impl TermVector {
    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.0.iter().map(|(t, w)| w * large.get(t)).sum()
    }

    /// Cosine similarity; 0 when either side has zero norm.
    pub fn cosine(&self, other: &TermVector) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            0.0
        } else {
            (self.dot(other) / denom).clamp(0.0, 1.0)
        }
    }

    pub fn add_assign(&mut self, other: &TermVector) {
        for (t, w) in &other.0 {
            *self.0.entry(t.clone()).or_insert(0.0) += w;
        }
    }

    pub fn terms(&self) -> TermSet {
        self.0.keys().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct Stopwords(HashSet<String>);

static ENGLISH_STOPWORDS: LazyLock<Stopwords> =
    LazyLock::new(|| Stopwords::from_list(STOPWORDS_EN));

impl Stopwords {
    /// One word per line; entries are normalized like input tokens, so
    /// "don't" also filters "dont".
    pub fn from_list(list: &str) -> Self {
        Self(
            list.lines()
                .map(normalize_token)
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn english() -> &'static Stopwords {
        &ENGLISH_STOPWORDS
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercases and drops every character that is not alphanumeric.
pub fn normalize_token(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalizedTerms {
    pub set: TermSet,
    pub counts: TermVector,
}

/// Vocabulary filter used by every lexical feature: punctuation stripped,
/// lowercased, stopwords removed, length within 3..=14 characters.
pub fn normalize_terms(text: &str, stopwords: &Stopwords) -> NormalizedTerms {
    let mut counts = BTreeMap::new();
    for tok in tokens(text) {
        let term = normalize_token(tok);
        let len = term.chars().count();
        if !(MIN_TERM_CHARS..=MAX_TERM_CHARS).contains(&len) || stopwords.contains(&term) {
            continue;
        }
        *counts.entry(term).or_insert(0.0) += 1.0;
    }
    let counts = TermVector(counts);
    NormalizedTerms {
        set: counts.terms(),
        counts,
    }
}
