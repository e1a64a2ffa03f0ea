//! Persisted pair classifier: idf table, feature settings and the
//! cross-validation ensemble in one JSON file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use minutekit::features::{FeatureConfig, IdfTable, FEATURE_NAMES};
use minutekit::learn::{CvEnsemble, HyperParams, LossKind, Metrics};
use serde::{Deserialize, Serialize};

use crate::manifest::Task;

pub const MODEL_FORMAT: &str = "minutekit-pair-model";
pub const MODEL_VERSION: u32 = 1;
/// Bumped whenever the meaning or order of the feature vector changes.
pub const FEATURE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub format: String,
    pub model_version: u32,
    pub feature_version: u32,
    pub task: Task,
    pub feature_names: Vec<String>,
    pub features: FeatureConfig,
    pub idf: IdfTable,
    pub loss_kind: LossKind,
    pub hyperparams: HyperParams,
    pub cv_metrics: Metrics,
    pub ensemble: CvEnsemble,
}

impl PairModel {
    pub fn new(
        task: Task,
        features: FeatureConfig,
        idf: IdfTable,
        loss_kind: LossKind,
        hyperparams: HyperParams,
        cv_metrics: Metrics,
        ensemble: CvEnsemble,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            model_version: MODEL_VERSION,
            feature_version: FEATURE_VERSION,
            task,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            features,
            idf,
            loss_kind,
            hyperparams,
            cv_metrics,
            ensemble,
        }
    }

    /// Reads a model and rejects other formats or versions.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading model {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing model {}", path.display()))?;
        let field = |k: &str| value.get(k).cloned().unwrap_or(serde_json::Value::Null);
        if field("format") != MODEL_FORMAT {
            bail!("{} is not a {MODEL_FORMAT} file", path.display());
        }
        if field("model_version") != MODEL_VERSION || field("feature_version") != FEATURE_VERSION {
            bail!(
                "model version {}/{} does not match this build ({MODEL_VERSION}/{FEATURE_VERSION})",
                field("model_version"),
                field("feature_version")
            );
        }
        let model: PairModel = serde_json::from_value(value)
            .with_context(|| format!("decoding model {}", path.display()))?;
        if model.feature_names.len() != FEATURE_NAMES.len()
            || model.ensemble.scaler.mean.len() != FEATURE_NAMES.len()
        {
            bail!("model expects {} features", model.feature_names.len());
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}
