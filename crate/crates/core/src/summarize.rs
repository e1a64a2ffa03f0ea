//! Block-level summarization: speaker-prefixed block text, whole-line
//! truncation to a token budget, a pluggable summarizer with an extractive
//! default, and regex post-processing of the generated text.

use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::Block;
use crate::text::{
    normalize_terms, split_sentences, token_count, Sentence, Stopwords, TermVector, Transcript,
};

const DEFAULT_POST_RULES: &str = include_str!("../data/postrules_en.tsv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummarizeError {
    #[error("block contains no sentences")]
    EmptyBlock,
    #[error("post-processing rule on line {line}: {message}")]
    BadRule { line: usize, message: String },
    #[error("summarizer backend failed: {0}")]
    Backend(String),
}

/// Block text as fed to a summarizer: one `SPEAKER: text` line per utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockText {
    pub lines: Vec<String>,
    pub token_count: usize,
}

impl BlockText {
    pub fn from_lines(lines: Vec<String>) -> Self {
        let token_count = lines.iter().map(|l| token_count(l)).sum();
        Self { lines, token_count }
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// Splits `SPEAKER: text` into its two halves.
pub fn split_speaker(line: &str) -> (&str, &str) {
    match line.split_once(": ") {
        Some((speaker, text)) => (speaker, text),
        None => ("", line),
    }
}

/// Builds the block text. Consecutive block sentences from the same
/// utterance share a line; an utterance cut by a block boundary only
/// contributes the sentences inside the block.
pub fn format_block(
    block: &Block,
    sentences: &[Sentence],
    transcript: &Transcript,
) -> Result<BlockText, SummarizeError> {
    if block.is_empty() || block.end > sentences.len() {
        return Err(SummarizeError::EmptyBlock);
    }
    let mut lines: Vec<(usize, String)> = Vec::new();
    for s in block.sentences(sentences) {
        match lines.last_mut() {
            Some((u, text)) if *u == s.utterance_index => {
                text.push(' ');
                text.push_str(&s.text);
            }
            _ => lines.push((s.utterance_index, s.text.clone())),
        }
    }
    let lines = lines
        .into_iter()
        .map(|(u, text)| format!("{}: {}", transcript.utterances[u].speaker, text))
        .collect();
    Ok(BlockText::from_lines(lines))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub block: BlockText,
    pub dropped_lines: usize,
    /// The first line alone exceeded the budget and was cut mid-line.
    pub hard_truncated: bool,
}

/// Drops trailing lines until the block fits `max_tokens`.
pub fn truncate_block(bt: &BlockText, max_tokens: usize) -> Truncation {
    let max_tokens = max_tokens.max(1);
    let mut kept = Vec::new();
    let mut total = 0;
    for line in &bt.lines {
        let n = token_count(line);
        if total + n > max_tokens {
            break;
        }
        total += n;
        kept.push(line.clone());
    }
    let mut hard_truncated = false;
    if kept.is_empty() {
        if let Some(first) = bt.lines.first() {
            log::warn!("first block line exceeds {max_tokens} tokens; cutting it");
            kept.push(
                crate::text::tokens(first)
                    .take(max_tokens)
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            hard_truncated = true;
        }
    }
    Truncation {
        dropped_lines: bt.lines.len() - kept.len(),
        block: BlockText::from_lines(kept),
        hard_truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    pub source_block: Option<Block>,
}

/// Any component that turns block lines into summary text.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, block: &BlockText) -> Result<String, SummarizeError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizeConfig {
    /// Fraction of block lines to keep as summary sentences.
    pub ratio: f64,
    pub max_tokens: usize,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        Self {
            ratio: 0.25,
            max_tokens: 1024,
        }
    }
}

/// Picks the sentences closest to the block's term centroid and attributes
/// each to its speaker.
#[derive(Debug, Clone, Copy)]
pub struct CentroidExtractive {
    pub ratio: f64,
}

impl Default for CentroidExtractive {
    fn default() -> Self {
        Self {
            ratio: SummarizeConfig::default().ratio,
        }
    }
}

struct Candidate<'a> {
    speaker: &'a str,
    sentence: String,
    terms: TermVector,
}

impl CentroidExtractive {
    /// Indices (in block order) of the selected candidate sentences, plus the
    /// candidates themselves as `(speaker, sentence)`.
    pub fn select(&self, bt: &BlockText) -> (Vec<usize>, Vec<(String, String)>) {
        let sw = Stopwords::english();
        let candidates: Vec<Candidate> = bt
            .lines
            .iter()
            .flat_map(|line| {
                let (speaker, text) = split_speaker(line);
                split_sentences(text)
                    .into_iter()
                    .map(move |sentence| Candidate {
                        speaker,
                        terms: normalize_terms(&sentence, sw).counts,
                        sentence,
                    })
            })
            .collect();
        let mut centroid = TermVector::default();
        for c in &candidates {
            centroid.add_assign(&c.terms);
        }
        let m = ((self.ratio * bt.lines.len() as f64).ceil() as usize)
            .max(1)
            .min(candidates.len());
        let mut order: Vec<(usize, f64)> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.terms.cosine(&centroid)))
            .collect();
        // Stable sort keeps earlier positions first among equal scores.
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut picked: Vec<usize> = order.into_iter().take(m).map(|(i, _)| i).collect();
        picked.sort_unstable();
        let all = candidates
            .into_iter()
            .map(|c| (c.speaker.to_string(), c.sentence))
            .collect();
        (picked, all)
    }
}

fn with_terminal_punctuation(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

impl Summarizer for CentroidExtractive {
    fn summarize(&self, bt: &BlockText) -> Result<String, SummarizeError> {
        if bt.is_empty() {
            return Err(SummarizeError::EmptyBlock);
        }
        let (picked, candidates) = self.select(bt);
        if picked.is_empty() {
            return Err(SummarizeError::EmptyBlock);
        }
        let parts: Vec<String> = picked
            .iter()
            .map(|&i| {
                let (speaker, sentence) = &candidates[i];
                let sentence = with_terminal_punctuation(sentence);
                if speaker.is_empty() {
                    sentence
                } else {
                    format!("{speaker} said: {sentence}")
                }
            })
            .collect();
        Ok(parts.join(" "))
    }
}

/// Summarizes with the extractive default.
pub fn summarize_block(bt: &BlockText, cfg: &SummarizeConfig) -> Result<Summary, SummarizeError> {
    let text = CentroidExtractive { ratio: cfg.ratio }.summarize(bt)?;
    Ok(Summary {
        text,
        source_block: None,
    })
}

/// Ensures summarizer output satisfies the summary invariants.
pub fn finish_summary(text: &str, block: Option<Block>) -> Result<Summary, SummarizeError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(SummarizeError::EmptyBlock);
    }
    Ok(Summary {
        text: with_terminal_punctuation(trimmed),
        source_block: block,
    })
}

#[derive(Debug, Clone)]
pub struct PostRule {
    pub pattern: Regex,
    pub replacement: String,
    pub order: usize,
}

impl PostRule {
    pub fn apply(&self, text: &str) -> String {
        self.pattern
            .replace_all(text, |caps: &Captures| {
                expand_replacement(caps, &self.replacement)
            })
            .into_owned()
    }
}

/// Expands `$N`, `${N}` and `\u$N` (first character uppercased) references.
fn expand_replacement(caps: &Captures, template: &str) -> String {
    let mut out = String::new();
    let mut chars = template.chars().peekable();
    let mut upper_next = false;
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('u') => upper_next = true,
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            },
            '$' => {
                let braced = chars.peek() == Some(&'{');
                if braced {
                    chars.next();
                }
                let mut digits = String::new();
                while let Some(d) = chars.peek().copied().filter(char::is_ascii_digit) {
                    digits.push(d);
                    chars.next();
                }
                if braced {
                    chars.next();
                }
                let group = digits
                    .parse::<usize>()
                    .ok()
                    .and_then(|g| caps.get(g))
                    .map_or("", |m| m.as_str());
                if std::mem::take(&mut upper_next) {
                    let mut gc = group.chars();
                    if let Some(first) = gc.next() {
                        out.extend(first.to_uppercase());
                        out.push_str(gc.as_str());
                    }
                } else {
                    out.push_str(group);
                }
            }
            _ => out.push(c),
        }
    }
    out
}

/// Parses `pattern<TAB>replacement` lines; `#` starts a comment line.
pub fn parse_post_rules(tsv: &str) -> Result<Vec<PostRule>, SummarizeError> {
    let mut rules = Vec::new();
    for (i, line) in tsv.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (pattern, replacement) = line.split_once('\t').ok_or(SummarizeError::BadRule {
            line: i + 1,
            message: "missing tab separator".into(),
        })?;
        let pattern = Regex::new(pattern).map_err(|e| SummarizeError::BadRule {
            line: i + 1,
            message: e.to_string(),
        })?;
        rules.push(PostRule {
            pattern,
            replacement: replacement.to_string(),
            order: rules.len(),
        });
    }
    Ok(rules)
}

static DEFAULT_RULES: LazyLock<Vec<PostRule>> =
    LazyLock::new(|| parse_post_rules(DEFAULT_POST_RULES).expect("bundled post rules parse"));

pub fn default_post_rules() -> &'static [PostRule] {
    &DEFAULT_RULES
}

/// Applies each rule globally, in ascending `order`.
pub fn postprocess(text: &str, rules: &[PostRule]) -> String {
    let mut ordered: Vec<&PostRule> = rules.iter().collect();
    ordered.sort_by_key(|r| r.order);
    ordered
        .into_iter()
        .fold(text.to_string(), |acc, rule| rule.apply(&acc))
}
