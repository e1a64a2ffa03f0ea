//! Tab-separated pair manifests: `pair_id  doc1  doc2  [label]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use minutekit::{Document, DocumentKind};
use serde::{Deserialize, Serialize};

/// Task B pairs a transcript with a minute; task C pairs two minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Task {
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "C", alias = "c")]
    C,
}

impl Task {
    pub fn kinds(self) -> (DocumentKind, DocumentKind) {
        match self {
            Self::B => (DocumentKind::Transcript, DocumentKind::Minute),
            Self::C => (DocumentKind::Minute, DocumentKind::Minute),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRow {
    pub pair_id: String,
    pub doc1: PathBuf,
    pub doc2: PathBuf,
    pub label: Option<bool>,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Parses manifest text; document paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<PairRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if rows.is_empty() && cols[0].trim() == "pair_id" {
            continue;
        }
        if !(3..=4).contains(&cols.len()) {
            bail!(
                "manifest line {}: expected 3 or 4 tab-separated columns, got {}",
                i + 1,
                cols.len()
            );
        }
        let label = match cols.get(3).map(|c| c.trim()) {
            None | Some("") => None,
            Some(c) => Some(
                parse_label(c)
                    .with_context(|| format!("manifest line {}: bad label {c:?}", i + 1))?,
            ),
        };
        rows.push(PairRow {
            pair_id: cols[0].trim().to_string(),
            doc1: base.join(cols[1].trim()),
            doc2: base.join(cols[2].trim()),
            label,
        });
    }
    Ok(rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<PairRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn load_document(path: &Path, kind: DocumentKind) -> Result<Document> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading document {}", path.display()))?;
    Ok(Document::new(path.display().to_string(), kind, raw))
}

/// Loads every distinct document of `rows` once.
#[derive(Debug, Default)]
pub struct DocumentCache {
    docs: BTreeMap<(PathBuf, bool), Document>,
}

impl DocumentCache {
    pub fn load(rows: &[PairRow], task: Task) -> Result<Self> {
        let (k1, k2) = task.kinds();
        let mut docs = BTreeMap::new();
        for row in rows {
            for (path, kind) in [(&row.doc1, k1), (&row.doc2, k2)] {
                let key = (path.clone(), kind == DocumentKind::Transcript);
                if let std::collections::btree_map::Entry::Vacant(slot) = docs.entry(key) {
                    slot.insert(load_document(path, kind)?);
                }
            }
        }
        Ok(Self { docs })
    }

    pub fn pair(&self, row: &PairRow, task: Task) -> (&Document, &Document) {
        let (k1, k2) = task.kinds();
        let get =
            |p: &PathBuf, k: DocumentKind| &self.docs[&(p.clone(), k == DocumentKind::Transcript)];
        (get(&row.doc1, k1), get(&row.doc2, k2))
    }

    pub fn documents(&self) -> Vec<Document> {
        self.docs.values().cloned().collect()
    }
}
