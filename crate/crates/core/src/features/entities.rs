//! Anonymized entity tokens such as `[PERSON1]` or `[PROJECT 7]`.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

pub type NamedEntitySet = BTreeSet<String>;

pub const DEFAULT_TAGS: [&str; 3] = ["PERSON", "PROJECT", "ORGANIZATION"];

#[derive(Debug, Clone)]
pub struct EntityExtractor {
    pattern: Regex,
}

impl EntityExtractor {
    /// Default tags plus `extra`; tags are matched literally.
    pub fn new<S: AsRef<str>>(extra: &[S]) -> Self {
        let mut tags: Vec<String> = DEFAULT_TAGS.iter().map(|t| regex::escape(t)).collect();
        for t in extra {
            let t = regex::escape(t.as_ref());
            if !tags.contains(&t) {
                tags.push(t);
            }
        }
        let pattern = Regex::new(&format!(r"\[({})\s?([A-Za-z0-9]*)\]", tags.join("|")))
            .expect("escaped tags form a valid pattern");
        Self { pattern }
    }

    pub fn extract(&self, text: &str) -> NamedEntitySet {
        self.pattern
            .captures_iter(text)
            .map(|c| format!("{}{}", &c[1], &c[2]).to_uppercase())
            .collect()
    }
}

impl Default for EntityExtractor {
    fn default() -> Self {
        Self::new::<&str>(&[])
    }
}

static DEFAULT_EXTRACTOR: LazyLock<EntityExtractor> = LazyLock::new(EntityExtractor::default);

pub fn extract_entities(text: &str) -> NamedEntitySet {
    DEFAULT_EXTRACTOR.extract(text)
}

/// Intersection over union; 0 when either side is empty.
pub fn ne_overlap(e1: &NamedEntitySet, e2: &NamedEntitySet) -> f64 {
    if e1.is_empty() || e2.is_empty() {
        return 0.0;
    }
    let inter = e1.intersection(e2).count();
    let union = e1.union(e2).count();
    inter as f64 / union as f64
}
