//! Argument structuring of summary sentences into an itemized minute.
//!
//! Each summary sentence is a proposition labeled `Task`, `Fact` or `Disc`;
//! support relations (`Reason`, `Evidence`) point from a sentence back to the
//! one it supports. The structure builder turns labels plus relations into a
//! tree that renders as
//!
//! ```text
//! * first sentence
//! - Disc: an opinion on it
//! - - Fact: the reason behind that opinion
//! * a Task sentence opens a new root
//! ```

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArgMineError {
    #[error("no propositions to label")]
    NoPropositions,
    #[error("{labels} labels for {props} propositions")]
    LabelMismatch { props: usize, labels: usize },
    #[error("relation {src} -> {dst} references a missing proposition")]
    BadRelation { src: usize, dst: usize },
    #[error("argument mining backend failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub text: String,
    pub index: usize,
}

pub fn propositions<S: AsRef<str>>(sentences: &[S]) -> Vec<Proposition> {
    sentences
        .iter()
        .enumerate()
        .map(|(index, s)| Proposition {
            text: s.as_ref().to_string(),
            index,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropLabel {
    Task,
    Fact,
    Disc,
}

impl PropLabel {
    /// Maps CDCP proposition types onto the three minute labels.
    pub fn from_cdcp(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "policy" => Some(Self::Task),
            "testimony" | "fact" => Some(Self::Fact),
            "value" => Some(Self::Disc),
            _ => None,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim() {
            "Task" => Some(Self::Task),
            "Fact" => Some(Self::Fact),
            "Disc" => Some(Self::Disc),
            other => Self::from_cdcp(other),
        }
    }
}

impl fmt::Display for PropLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Task => "Task",
            Self::Fact => "Fact",
            Self::Disc => "Disc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationKind {
    Reason,
    Evidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgRelation {
    pub src: usize,
    pub dst: usize,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentGraph {
    pub propositions: Vec<Proposition>,
    pub labels: Vec<PropLabel>,
    pub relations: Vec<ArgRelation>,
}

impl ArgumentGraph {
    pub fn new(
        propositions: Vec<Proposition>,
        labels: Vec<PropLabel>,
        relations: Vec<ArgRelation>,
    ) -> Result<Self, ArgMineError> {
        if labels.len() != propositions.len() {
            return Err(ArgMineError::LabelMismatch {
                props: propositions.len(),
                labels: labels.len(),
            });
        }
        let n = propositions.len();
        if let Some(r) = relations
            .iter()
            .find(|r| r.src >= n || r.dst >= n || r.src == r.dst)
        {
            return Err(ArgMineError::BadRelation {
                src: r.src,
                dst: r.dst,
            });
        }
        Ok(Self {
            propositions,
            labels,
            relations,
        })
    }
}

/// Proposition labeler backend.
pub trait PropositionLabeler: Send + Sync {
    fn label(&self, props: &[Proposition]) -> Result<Vec<PropLabel>, ArgMineError>;
}

/// Support-relation backend.
pub trait RelationExtractor: Send + Sync {
    fn relations(
        &self,
        props: &[Proposition],
        labels: &[PropLabel],
    ) -> Result<Vec<ArgRelation>, ArgMineError>;
}

static ATTRIBUTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Z][A-Z_]*[0-9]*\s+said:\s*").unwrap());

static POLICY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(should|must|need to|needs to|going to|will\s+(?:not\s+)?[a-z]+)\b").unwrap()
});

static OPINION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"(?i)\b(think|thinks|thought|believe|believes|feel|feels|agree|agrees|disagree|disagrees|",
        r"like the idea|good|bad|great|nice|better|worse|best|worst|important|interesting|",
        r"difficult|easy|useful|useless|helpful|problematic|excellent|terrible|promising)\b"
    ))
    .unwrap()
});

static CAUSAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(because|since|as|so|therefore|that is why)\b").unwrap());

/// Drops a leading `SPEAKER said:` attribution.
pub fn strip_attribution(text: &str) -> &str {
    match ATTRIBUTION.find(text) {
        Some(m) => &text[m.end()..],
        None => text,
    }
}

/// Keyword rules: policy phrasing is a Task, opinion markers a Disc,
/// anything else a Fact.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleLabeler;

impl RuleLabeler {
    pub fn label_one(text: &str) -> PropLabel {
        let body = strip_attribution(text);
        if POLICY.is_match(body) {
            PropLabel::Task
        } else if OPINION.is_match(body) {
            PropLabel::Disc
        } else {
            PropLabel::Fact
        }
    }
}

impl PropositionLabeler for RuleLabeler {
    fn label(&self, props: &[Proposition]) -> Result<Vec<PropLabel>, ArgMineError> {
        label_propositions(props)
    }
}

pub fn label_propositions(props: &[Proposition]) -> Result<Vec<PropLabel>, ArgMineError> {
    if props.is_empty() {
        return Err(ArgMineError::NoPropositions);
    }
    Ok(props
        .iter()
        .map(|p| RuleLabeler::label_one(&p.text))
        .collect())
}

/// A sentence opening with a causal connective gives a Reason for the
/// sentence right before it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConnectiveRelations;

impl RelationExtractor for ConnectiveRelations {
    fn relations(
        &self,
        props: &[Proposition],
        labels: &[PropLabel],
    ) -> Result<Vec<ArgRelation>, ArgMineError> {
        extract_relations(props, labels)
    }
}

pub fn extract_relations(
    props: &[Proposition],
    labels: &[PropLabel],
) -> Result<Vec<ArgRelation>, ArgMineError> {
    if labels.len() != props.len() {
        return Err(ArgMineError::LabelMismatch {
            props: props.len(),
            labels: labels.len(),
        });
    }
    Ok(props
        .iter()
        .skip(1)
        .filter(|p| CAUSAL.is_match(strip_attribution(&p.text)))
        .map(|p| ArgRelation {
            src: p.index,
            dst: p.index - 1,
            kind: RelationKind::Reason,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinuteItem {
    pub depth: usize,
    /// Proposition index this item renders.
    pub index: usize,
    /// `None` on roots.
    pub label: Option<PropLabel>,
    pub text: String,
    pub children: Vec<MinuteItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredMinute {
    pub roots: Vec<MinuteItem>,
}

impl StructuredMinute {
    /// Items in pre-order.
    pub fn preorder(&self) -> Vec<&MinuteItem> {
        fn walk<'a>(item: &'a MinuteItem, out: &mut Vec<&'a MinuteItem>) {
            out.push(item);
            for c in &item.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        for r in &self.roots {
            walk(r, &mut out);
        }
        out
    }
}

/// Assembles the itemized tree.
///
/// Proposition 0 and every Task are roots. A proposition with a relation to
/// the proposition immediately before it becomes that proposition's child;
/// every other proposition becomes a child of the latest root. Relations
/// that point forward or skip over sentences are ignored, which keeps the
/// pre-order traversal in proposition order.
pub fn build_structure(g: &ArgumentGraph) -> StructuredMinute {
    let n = g.propositions.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut last_root = 0;
    for i in 0..n {
        if i == 0 || g.labels[i] == PropLabel::Task {
            last_root = i;
            continue;
        }
        let supports_previous = g.relations.iter().any(|r| r.src == i && r.dst + 1 == i);
        let p = if supports_previous { i - 1 } else { last_root };
        parent[i] = Some(p);
        depth[i] = depth[p] + 1;
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    fn assemble(
        i: usize,
        g: &ArgumentGraph,
        parent: &[Option<usize>],
        depth: &[usize],
        children: &[Vec<usize>],
    ) -> MinuteItem {
        MinuteItem {
            depth: depth[i],
            index: i,
            label: parent[i].map(|_| g.labels[i]),
            text: g.propositions[i].text.clone(),
            children: children[i]
                .iter()
                .map(|&c| assemble(c, g, parent, depth, children))
                .collect(),
        }
    }
    StructuredMinute {
        roots: (0..n)
            .filter(|&i| parent[i].is_none())
            .map(|i| assemble(i, g, &parent, &depth, &children))
            .collect(),
    }
}

/// One line per item: `* text` for roots, `- `×depth + `Label: text` below.
pub fn render(sm: &StructuredMinute) -> String {
    sm.preorder()
        .into_iter()
        .map(|item| match item.label {
            None if item.depth == 0 => format!("* {}", item.text),
            label => format!(
                "{}{}: {}",
                "- ".repeat(item.depth),
                label.unwrap_or(PropLabel::Fact),
                item.text
            ),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`render`] for trees whose items carry no line breaks.
/// Returns `(depth, label, text)` per line.
pub fn parse_rendered(text: &str) -> Option<Vec<(usize, Option<PropLabel>, String)>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            if let Some(rest) = line.strip_prefix("* ") {
                return Some((0, None, rest.to_string()));
            }
            let mut rest = line;
            let mut depth = 0;
            while let Some(r) = rest.strip_prefix("- ") {
                rest = r;
                depth += 1;
            }
            let (label, body) = rest.split_once(": ")?;
            (depth > 0).then_some((depth, Some(PropLabel::parse(label)?), body.to_string()))
        })
        .collect()
}

/// Labels, links and structures one summary's sentences.
pub fn structure_sentences<S: AsRef<str>>(
    sentences: &[S],
    labeler: &dyn PropositionLabeler,
    relations: &dyn RelationExtractor,
) -> Result<(ArgumentGraph, StructuredMinute), ArgMineError> {
    let props = propositions(sentences);
    let labels = labeler.label(&props)?;
    if labels.len() != props.len() {
        return Err(ArgMineError::LabelMismatch {
            props: props.len(),
            labels: labels.len(),
        });
    }
    let rels = relations.relations(&props, &labels)?;
    let graph = ArgumentGraph::new(props, labels, rels)?;
    let sm = build_structure(&graph);
    Ok((graph, sm))
}
