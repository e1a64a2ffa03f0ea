//! JSON run configuration. Unknown keys are rejected and every numeric
//! field is range-checked at load time.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use minutekit::features::FeatureConfig;
use minutekit::learn::{LossKind, SearchSpace};
use minutekit::segment::SegmentConfig;
use minutekit::summarize::SummarizeConfig;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Where a pipeline stage runs: the built-in implementation or an external
/// command speaking JSON over stdin/stdout.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Backend {
    #[default]
    Builtin,
    Exec(String),
}

impl TryFrom<String> for Backend {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        if s == "default" {
            return Ok(Self::Builtin);
        }
        match s.strip_prefix("exec:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(Self::Exec(cmd.trim().to_string())),
            _ => Err(format!(
                "backend must be \"default\" or \"exec:<command>\", got {s:?}"
            )),
        }
    }
}

impl From<Backend> for String {
    fn from(b: Backend) -> String {
        match b {
            Backend::Builtin => "default".into(),
            Backend::Exec(cmd) => format!("exec:{cmd}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmenterSection {
    pub backend: Backend,
    pub max_tokens: usize,
    pub stride: usize,
    pub window: usize,
    pub k: f64,
}

impl Default for SegmenterSection {
    fn default() -> Self {
        let d = SegmentConfig::default();
        Self {
            backend: Backend::Builtin,
            max_tokens: d.max_tokens,
            stride: d.stride,
            window: d.window,
            k: d.k,
        }
    }
}

impl SegmenterSection {
    pub fn segment_config(&self) -> SegmentConfig {
        SegmentConfig {
            max_tokens: self.max_tokens,
            stride: self.stride,
            window: self.window,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizerSection {
    pub backend: Backend,
    pub ratio: f64,
    pub max_tokens: usize,
    /// Post-processing rule table; the bundled English table when absent.
    pub post_rules: Option<PathBuf>,
}

impl Default for SummarizerSection {
    fn default() -> Self {
        let d = SummarizeConfig::default();
        Self {
            backend: Backend::Builtin,
            ratio: d.ratio,
            max_tokens: d.max_tokens,
            post_rules: None,
        }
    }
}

impl SummarizerSection {
    pub fn summarize_config(&self) -> SummarizeConfig {
        SummarizeConfig {
            ratio: self.ratio,
            max_tokens: self.max_tokens,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArgmineSection {
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnSection {
    pub k: usize,
    /// Random-search trials.
    pub budget: usize,
    pub seed: u64,
    pub loss_kind: LossKind,
    pub epochs: usize,
    pub lambda: (f64, f64),
    pub learning_rate: (f64, f64),
}

impl Default for LearnSection {
    fn default() -> Self {
        let space = SearchSpace::default();
        Self {
            k: 10,
            budget: 20,
            seed: 0,
            loss_kind: LossKind::Logistic,
            epochs: space.epochs,
            lambda: space.lambda,
            learning_rate: space.learning_rate,
        }
    }
}

impl LearnSection {
    pub fn search_space(&self) -> SearchSpace {
        SearchSpace {
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub version: u32,
    pub segmenter: SegmenterSection,
    pub summarizer: SummarizerSection,
    pub argmine: ArgmineSection,
    pub features: FeatureConfig,
    pub learn: LearnSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            segmenter: SegmenterSection::default(),
            summarizer: SummarizerSection::default(),
            argmine: ArgmineSection::default(),
            features: FeatureConfig::default(),
            learn: LearnSection::default(),
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    ensure!(
        lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi,
        "{name} range must satisfy 0 < low <= high, got ({lo}, {hi})"
    );
    Ok(())
}

impl Config {
    /// Reads and validates `path`; relative paths inside resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(rules) = &cfg.summarizer.post_rules {
            if rules.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.summarizer.post_rules = Some(base.join(rules));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            );
        }
        let s = &self.segmenter;
        ensure!(s.max_tokens >= 1, "segmenter.max_tokens must be at least 1");
        ensure!(
            (1..s.max_tokens).contains(&s.stride),
            "segmenter.stride must lie in 1..max_tokens"
        );
        ensure!(s.window >= 1, "segmenter.window must be at least 1");
        ensure!(s.k.is_finite(), "segmenter.k must be finite");
        let m = &self.summarizer;
        ensure!(
            m.ratio > 0.0 && m.ratio <= 1.0,
            "summarizer.ratio must lie in (0, 1]"
        );
        ensure!(
            m.max_tokens >= 1,
            "summarizer.max_tokens must be at least 1"
        );
        ensure!(self.features.n >= 1, "features.n must be at least 1");
        ensure!(
            self.features.embedder.dim >= 1,
            "features.embedder.dim must be at least 1"
        );
        let l = &self.learn;
        ensure!(l.k >= 2, "learn.k must be at least 2");
        ensure!(l.budget >= 1, "learn.budget must be at least 1");
        ensure!(l.epochs >= 1, "learn.epochs must be at least 1");
        check_range("learn.lambda", l.lambda)?;
        check_range("learn.learning_rate", l.learning_rate)?;
        Ok(())
    }
}
