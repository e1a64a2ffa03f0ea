//! Linear pair classifiers trained by full-batch gradient descent, with
//! stratified k-fold cross-validation, seeded random hyperparameter search
//! and an averaging ensemble over the fold models.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MIN_STD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("{rows} rows cannot be split into {k} folds")]
    TooFewRows { rows: usize, k: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: bool,
    pub pair_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn from_xy(features: Vec<Vec<f64>>, labels: Vec<bool>) -> Self {
        Self {
            rows: features
                .into_iter()
                .zip(labels)
                .enumerate()
                .map(|(i, (features, label))| Row {
                    features,
                    label,
                    pair_id: i.to_string(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.features.len())
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label).collect()
    }

    fn check(&self) -> Result<usize, LearnError> {
        let dim = self.dim();
        if self.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        if let Some(r) = self.rows.iter().find(|r| r.features.len() != dim) {
            return Err(LearnError::DimensionMismatch {
                expected: dim,
                got: r.features.len(),
            });
        }
        Ok(dim)
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Per-dimension standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(ds: &Dataset) -> Result<Scaler, LearnError> {
    let dim = ds.check()?;
    let n = ds.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in &ds.rows {
        for (m, x) in mean.iter_mut().zip(&r.features) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in &ds.rows {
        for ((v, x), m) in var.iter_mut().zip(&r.features).zip(&mean) {
            *v += (x - m).powi(2);
        }
    }
    let std = var
        .into_iter()
        .map(|v| (v / n).sqrt().max(MIN_STD))
        .collect();
    Ok(Scaler { mean, std })
}

impl Scaler {
    pub fn apply(&self, fv: &[f64]) -> Result<Vec<f64>, LearnError> {
        if fv.len() != self.mean.len() {
            return Err(LearnError::DimensionMismatch {
                expected: self.mean.len(),
                got: fv.len(),
            });
        }
        Ok(fv
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn apply_dataset(&self, ds: &Dataset) -> Result<Dataset, LearnError> {
        Ok(Dataset {
            rows: ds
                .rows
                .iter()
                .map(|r| {
                    Ok(Row {
                        features: self.apply(&r.features)?,
                        label: r.label,
                        pair_id: r.pair_id.clone(),
                    })
                })
                .collect::<Result<_, LearnError>>()?,
        })
    }
}

pub fn apply_scaler(scaler: &Scaler, fv: &[f64]) -> Result<Vec<f64>, LearnError> {
    scaler.apply(fv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// L2 strength, the inverse of an SVM's `C`.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Recorded for provenance; weights always start at zero.
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lambda: 1e-2,
            learning_rate: 0.1,
            epochs: 300,
            seed: 0,
        }
    }
}

impl HyperParams {
    fn validate(&self) -> Result<(), LearnError> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(LearnError::InvalidHyperParams(format!(
                "lambda {}",
                self.lambda
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(LearnError::InvalidHyperParams(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss_kind: LossKind,
    pub hyperparams: HyperParams,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Sigmoid of the margin for both loss kinds.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// Regularized mean loss on `ds`.
    pub fn objective(&self, ds: &Dataset) -> f64 {
        let n = ds.len().max(1) as f64;
        let data: f64 = ds
            .rows
            .iter()
            .map(|r| {
                let y = if r.label { 1.0 } else { -1.0 };
                let ym = y * self.margin(&r.features);
                match self.loss_kind {
                    // log(1 + e^{-ym}), stable for large |ym|
                    LossKind::Logistic => (-ym).max(0.0) + (-(ym.abs())).exp().ln_1p(),
                    LossKind::Hinge => (1.0 - ym).max(0.0),
                }
            })
            .sum::<f64>()
            / n;
        let l2: f64 = self.weights.iter().map(|w| w * w).sum();
        data + 0.5 * self.hyperparams.lambda * l2
    }
}

/// Full-batch gradient descent from zero weights; returns the objective
/// after every epoch alongside the model.
pub fn train_linear_with_history(
    ds: &Dataset,
    hp: &HyperParams,
    loss_kind: LossKind,
) -> Result<(LinearModel, Vec<f64>), LearnError> {
    let dim = ds.check()?;
    hp.validate()?;
    let positives = ds.rows.iter().filter(|r| r.label).count();
    if positives == 0 || positives == ds.len() {
        return Err(LearnError::SingleClassData);
    }
    let n = ds.len() as f64;
    let mut model = LinearModel {
        weights: vec![0.0; dim],
        bias: 0.0,
        loss_kind,
        hyperparams: *hp,
    };
    let mut history = Vec::with_capacity(hp.epochs);
    let mut grad_w = vec![0.0; dim];
    for _ in 0..hp.epochs {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for r in &ds.rows {
            let m = model.margin(&r.features);
            let coef = match loss_kind {
                LossKind::Logistic => sigmoid(m) - if r.label { 1.0 } else { 0.0 },
                LossKind::Hinge => {
                    let y = if r.label { 1.0 } else { -1.0 };
                    if y * m < 1.0 {
                        -y
                    } else {
                        0.0
                    }
                }
            };
            if coef != 0.0 {
                for (g, x) in grad_w.iter_mut().zip(&r.features) {
                    *g += coef * x;
                }
                grad_b += coef;
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= hp.learning_rate * (g / n + hp.lambda * *w);
        }
        model.bias -= hp.learning_rate * grad_b / n;
        history.push(model.objective(ds));
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(LearnError::InvalidHyperParams(
            "training diverged; lower the learning rate".into(),
        ));
    }
    Ok((model, history))
}

pub fn train_linear(
    ds: &Dataset,
    hp: &HyperParams,
    loss_kind: LossKind,
) -> Result<LinearModel, LearnError> {
    train_linear_with_history(ds, hp, loss_kind).map(|(m, _)| m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Absent when nothing was predicted positive.
    pub precision: Option<f64>,
    /// Absent when there are no positive gold labels.
    pub recall: Option<f64>,
    /// Zero unless both precision and recall are defined and non-zero.
    pub f1: f64,
}

/// Metrics with `true` as the positive class.
pub fn classification_metrics(preds: &[bool], golds: &[bool]) -> Result<Metrics, LearnError> {
    if preds.len() != golds.len() {
        return Err(LearnError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => 2.0 * p * r / (p + r),
        _ => 0.0,
    };
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / preds.len() as f64,
        precision,
        recall,
        f1,
    })
}

/// Metrics of the constant all-FALSE predictor.
pub fn majority_baseline(golds: &[bool]) -> Metrics {
    if golds.is_empty() {
        return Metrics {
            accuracy: 0.0,
            precision: None,
            recall: None,
            f1: 0.0,
        };
    }
    classification_metrics(&vec![false; golds.len()], golds).expect("equal lengths")
}

/// The fold models of a cross-validation run, scored by probability averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEnsemble {
    pub models: Vec<LinearModel>,
    pub scaler: Scaler,
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Mean model probability on the standardized vector; TRUE at or above the
/// threshold.
pub fn predict_ensemble(ens: &CvEnsemble, fv: &[f64]) -> Result<(f64, bool), LearnError> {
    let x = ens.scaler.apply(fv)?;
    if ens.models.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let score = ens.models.iter().map(|m| m.probability(&x)).sum::<f64>() / ens.models.len() as f64;
    Ok((score, score >= ens.threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub ensemble: CvEnsemble,
    /// Per-fold validation metrics averaged over folds.
    pub mean_metrics: Metrics,
    pub fold_metrics: Vec<Metrics>,
}

/// Stratified fold ids: each class is shuffled with `seed` and dealt out
/// round-robin.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            folds[i] = (offset + j) % k;
        }
        // Continue dealing where the previous class stopped so fold sizes stay even.
        offset = (offset + labels.iter().filter(|&&l| l == class).count()) % k.max(1);
    }
    folds
}

fn mean_metrics(all: &[Metrics]) -> Metrics {
    let n = all.len() as f64;
    let mean_opt = |f: fn(&Metrics) -> Option<f64>| {
        let vals: Vec<f64> = all.iter().filter_map(f).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    Metrics {
        accuracy: all.iter().map(|m| m.accuracy).sum::<f64>() / n,
        precision: mean_opt(|m| m.precision),
        recall: mean_opt(|m| m.recall),
        f1: all.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

/// Trains one model per held-out fold on standardized features.
pub fn cross_validate(
    ds: &Dataset,
    k: usize,
    hp: &HyperParams,
    loss_kind: LossKind,
    seed: u64,
) -> Result<CvOutcome, LearnError> {
    ds.check()?;
    if k < 2 || ds.len() < k {
        return Err(LearnError::TooFewRows { rows: ds.len(), k });
    }
    let scaler = fit_scaler(ds)?;
    let scaled = scaler.apply_dataset(ds)?;
    let folds = stratified_folds(&scaled.labels(), k, seed);

    let results: Vec<Result<(LinearModel, Metrics), LearnError>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..scaled.len()).filter(|&i| folds[i] != f).collect();
            let val_idx: Vec<usize> = (0..scaled.len()).filter(|&i| folds[i] == f).collect();
            let model = train_linear(&scaled.subset(&train_idx), hp, loss_kind)?;
            let preds: Vec<bool> = val_idx
                .iter()
                .map(|&i| model.probability(&scaled.rows[i].features) >= DEFAULT_THRESHOLD)
                .collect();
            let golds: Vec<bool> = val_idx.iter().map(|&i| scaled.rows[i].label).collect();
            Ok((model, classification_metrics(&preds, &golds)?))
        })
        .collect();
    let (models, fold_metrics): (Vec<_>, Vec<_>) = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    Ok(CvOutcome {
        mean_metrics: mean_metrics(&fold_metrics),
        fold_metrics,
        ensemble: CvEnsemble {
            models,
            scaler,
            threshold: DEFAULT_THRESHOLD,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub lambda: (f64, f64),
    pub learning_rate: (f64, f64),
    pub epochs: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lambda: (1e-4, 1e2),
            learning_rate: (1e-3, 1.0),
            epochs: 300,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo >= hi {
        return lo;
    }
    rng.random_range(lo.ln()..hi.ln()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub hyperparams: HyperParams,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: HyperParams,
    pub best_f1: f64,
    pub trials: Vec<Trial>,
}

/// Random search over log-uniform `lambda` and learning rate, scored by
/// mean cross-validated F1. The earliest trial wins ties.
pub fn hyperparam_search(
    ds: &Dataset,
    space: &SearchSpace,
    budget: usize,
    k: usize,
    loss_kind: LossKind,
    seed: u64,
) -> Result<SearchOutcome, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<HyperParams> = (0..budget.max(1))
        .map(|_| HyperParams {
            lambda: log_uniform(&mut rng, space.lambda),
            learning_rate: log_uniform(&mut rng, space.learning_rate),
            epochs: space.epochs,
            seed,
        })
        .collect();
    let mut trials = Vec::with_capacity(candidates.len());
    let mut best: Option<(HyperParams, f64)> = None;
    for hp in candidates {
        let mean_f1 = match cross_validate(ds, k, &hp, loss_kind, seed) {
            Ok(out) => out.mean_metrics.f1,
            // A diverging learning rate is a bad trial, not a failed search.
            Err(LearnError::InvalidHyperParams(_)) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        trials.push(Trial {
            hyperparams: hp,
            mean_f1,
        });
        if best.is_none_or(|(_, f)| mean_f1 > f) {
            best = Some((hp, mean_f1));
        }
    }
    let (best, best_f1) = best.expect("budget >= 1");
    Ok(SearchOutcome {
        best,
        best_f1,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(xs: &[f64], ys: &[bool]) -> Dataset {
        Dataset::from_xy(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    #[test]
    fn scaler_examples() {
        let d = Dataset::from_xy(vec![vec![0.0, 3.0], vec![2.0, 3.0]], vec![true, false]);
        let s = fit_scaler(&d).unwrap();
        assert_eq!(s.apply(&[0.0, 3.0]).unwrap(), vec![-1.0, 0.0]);
        assert_eq!(s.apply(&[2.0, 3.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(s.std[1], MIN_STD);
        assert_eq!(
            s.apply(&[1.0]),
            Err(LearnError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            fit_scaler(&Dataset::default()),
            Err(LearnError::EmptyDataset)
        );

        let d = Dataset::from_xy(
            (0..20)
                .map(|i| vec![i as f64 * 1.7 - 3.0, (i * i) as f64])
                .collect(),
            (0..20).map(|i| i % 2 == 0).collect(),
        );
        let scaled = fit_scaler(&d).unwrap().apply_dataset(&d).unwrap();
        for dim in 0..2 {
            let mean: f64 = scaled.rows.iter().map(|r| r.features[dim]).sum::<f64>() / 20.0;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn separable_direction_is_learned() {
        let d = ds(&[-1.0, 1.0], &[false, true]);
        for loss in [LossKind::Logistic, LossKind::Hinge] {
            let m = train_linear(&d, &HyperParams::default(), loss).unwrap();
            assert!(m.probability(&[2.0]) > 0.5, "{loss:?}");
            assert!(m.probability(&[-2.0]) < 0.5, "{loss:?}");
        }
    }

    #[test]
    fn symmetric_data_gives_zero_weight() {
        let d = ds(&[-1.0, 1.0, -1.0, 1.0], &[true, true, false, false]);
        let m = train_linear(&d, &HyperParams::default(), LossKind::Logistic).unwrap();
        assert!(m.weights[0].abs() < 1e-6);
        assert!((m.probability(&[0.3]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let d = ds(
            &[-2.0, -0.5, 0.3, 1.5, 0.1],
            &[false, false, true, true, false],
        );
        let hp = HyperParams::default();
        let a = train_linear(&d, &hp, LossKind::Hinge).unwrap();
        let b = train_linear(&d, &hp, LossKind::Hinge).unwrap();
        assert_eq!(a.weights[0].to_bits(), b.weights[0].to_bits());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        assert_eq!(
            train_linear(&ds(&[1.0, 2.0], &[true, true]), &hp, LossKind::Logistic),
            Err(LearnError::SingleClassData)
        );
    }

    #[test]
    fn logistic_loss_never_increases_at_small_rate() {
        let d = Dataset::from_xy(
            (0..30)
                .map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i % 7) as f64 - 3.0])
                .collect(),
            (0..30)
                .map(|i| (i as f64 * 0.37).sin() + 0.2 * ((i % 7) as f64 - 3.0) > 0.0)
                .collect(),
        );
        let hp = HyperParams {
            learning_rate: 1e-2,
            epochs: 400,
            ..Default::default()
        };
        let (_, history) = train_linear_with_history(&d, &hp, LossKind::Logistic).unwrap();
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn metrics_examples() {
        let m = classification_metrics(&[true, false], &[true, false]).unwrap();
        assert_eq!(m.accuracy, 1.0);

        let golds: Vec<bool> = (0..10).map(|i| i == 9).collect();
        let m = classification_metrics(&[false; 10], &golds).unwrap();
        assert!((m.accuracy - 0.9).abs() < 1e-12);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.precision, None);

        // TP=1, FP=1, FN=1
        let m = classification_metrics(&[true, true, false], &[true, false, true]).unwrap();
        assert_eq!(m.precision, Some(0.5));
        assert_eq!(m.recall, Some(0.5));
        assert!((m.f1 - 0.5).abs() < 1e-12);

        assert_eq!(
            classification_metrics(&[true], &[]),
            Err(LearnError::LengthMismatch { preds: 1, golds: 0 })
        );
    }

    #[test]
    fn majority_baseline_examples() {
        let golds: Vec<bool> = (0..1000).map(|i| i < 56).collect();
        assert!((majority_baseline(&golds).accuracy - 0.944).abs() < 1e-12);
        assert_eq!(majority_baseline(&[true, true]).accuracy, 0.0);
        assert_eq!(majority_baseline(&[false, false]).accuracy, 1.0);
    }

    #[test]
    fn two_fold_split_arithmetic() {
        let d = ds(&[-1.0, -2.0, 1.0, 2.0], &[false, false, true, true]);
        let folds = stratified_folds(&d.labels(), 2, 7);
        for f in 0..2 {
            let members: Vec<usize> = (0..4).filter(|&i| folds[i] == f).collect();
            assert_eq!(members.len(), 2);
            assert_eq!(members.iter().filter(|&&i| d.rows[i].label).count(), 1);
        }
        let out = cross_validate(&d, 2, &HyperParams::default(), LossKind::Logistic, 7).unwrap();
        assert_eq!(out.ensemble.models.len(), 2);
        assert_eq!(
            cross_validate(&d, 5, &HyperParams::default(), LossKind::Logistic, 7),
            Err(LearnError::TooFewRows { rows: 4, k: 5 })
        );
    }

    #[test]
    fn separable_set_cross_validates_perfectly() {
        let xs: Vec<f64> = (0..40)
            .map(|i| {
                if i < 20 {
                    -1.0 - i as f64 * 0.1
                } else {
                    1.0 + i as f64 * 0.1
                }
            })
            .collect();
        let ys: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let out = cross_validate(
            &ds(&xs, &ys),
            10,
            &HyperParams::default(),
            LossKind::Logistic,
            3,
        )
        .unwrap();
        assert_eq!(out.mean_metrics.accuracy, 1.0);
        assert_eq!(out.ensemble.models.len(), 10);
    }

    fn constant_model(p: f64) -> LinearModel {
        LinearModel {
            weights: vec![0.0],
            bias: (p / (1.0 - p)).ln(),
            loss_kind: LossKind::Logistic,
            hyperparams: HyperParams::default(),
        }
    }

    #[test]
    fn ensemble_averages_probabilities() {
        let scaler = Scaler {
            mean: vec![0.0],
            std: vec![1.0],
        };
        let ens = CvEnsemble {
            models: vec![constant_model(0.9); 10],
            scaler: scaler.clone(),
            threshold: DEFAULT_THRESHOLD,
        };
        let (score, label) = predict_ensemble(&ens, &[0.0]).unwrap();
        assert!((score - 0.9).abs() < 1e-12);
        assert!(label);

        let mut models = vec![constant_model(0.2); 5];
        models.extend(vec![constant_model(0.8); 5]);
        let ens = CvEnsemble {
            models,
            scaler,
            threshold: DEFAULT_THRESHOLD,
        };
        let (score, label) = predict_ensemble(&ens, &[0.0]).unwrap();
        assert!((score - 0.5).abs() < 1e-12);
        assert!(label);
        assert!(matches!(
            predict_ensemble(&ens, &[0.0, 1.0]),
            Err(LearnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicated_data_ensemble_matches_single_model() {
        // One distinct row per class: every fold trains on the same multiset.
        let base = [(-1.5, false), (0.7, true)];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..5 {
            for &(x, y) in &base {
                xs.push(x);
                ys.push(y);
            }
        }
        let d = ds(&xs, &ys);
        let hp = HyperParams::default();
        let out = cross_validate(&d, 5, &hp, LossKind::Logistic, 11).unwrap();
        let scaled = out.ensemble.scaler.apply_dataset(&d).unwrap();
        let folds = stratified_folds(&d.labels(), 5, 11);
        let train: Vec<usize> = (0..d.len()).filter(|&i| folds[i] != 0).collect();
        let single = train_linear(&scaled.subset(&train), &hp, LossKind::Logistic).unwrap();
        for &x in &[-2.0, 0.0, 0.4, 3.0] {
            let (score, _) = predict_ensemble(&out.ensemble, &[x]).unwrap();
            let z = out.ensemble.scaler.apply(&[x]).unwrap();
            assert!((score - single.probability(&z)).abs() < 1e-9);
        }
    }

    #[test]
    fn search_is_deterministic_and_respects_collapsed_space() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 - 14.5).collect();
        let ys: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
        let d = ds(&xs, &ys);
        let space = SearchSpace {
            epochs: 50,
            ..Default::default()
        };
        let a = hyperparam_search(&d, &space, 4, 3, LossKind::Logistic, 5).unwrap();
        let b = hyperparam_search(&d, &space, 4, 3, LossKind::Logistic, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 4);

        let one = hyperparam_search(&d, &space, 1, 3, LossKind::Logistic, 9).unwrap();
        assert_eq!(one.best, one.trials[0].hyperparams);

        let point = SearchSpace {
            lambda: (0.5, 0.5),
            learning_rate: (0.05, 0.05),
            epochs: 50,
        };
        let p = hyperparam_search(&d, &point, 3, 3, LossKind::Hinge, 1).unwrap();
        assert_eq!(p.best.lambda, 0.5);
        assert_eq!(p.best.learning_rate, 0.05);
    }

    #[test]
    fn label_invariant_under_affine_rescaling() {
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![((i * 7) % 13) as f64, ((i * 5) % 11) as f64 * 0.3])
            .collect();
        let ys: Vec<bool> = xs.iter().map(|x| x[0] + 2.0 * x[1] > 9.0).collect();
        let rescaled: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * 250.0 - 40.0, x[1]]).collect();
        let hp = HyperParams::default();
        let a = cross_validate(
            &Dataset::from_xy(xs.clone(), ys.clone()),
            5,
            &hp,
            LossKind::Logistic,
            2,
        )
        .unwrap();
        let b = cross_validate(
            &Dataset::from_xy(rescaled.clone(), ys),
            5,
            &hp,
            LossKind::Logistic,
            2,
        )
        .unwrap();
        for (x, y) in xs.iter().zip(&rescaled) {
            let (_, la) = predict_ensemble(&a.ensemble, x).unwrap();
            let (_, lb) = predict_ensemble(&b.ensemble, y).unwrap();
            assert_eq!(la, lb);
        }
    }

    proptest! {
        #[test]
        fn metrics_match_confusion_oracle(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let (preds, golds): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
            let m = classification_metrics(&preds, &golds).unwrap();
            let count = |p: bool, g: bool| pairs.iter().filter(|&&x| x == (p, g)).count() as f64;
            let (tp, fp, fneg, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
            prop_assert!((m.accuracy - (tp + tn) / pairs.len() as f64).abs() < 1e-12);
            if tp + fp > 0.0 {
                prop_assert!((m.precision.unwrap() - tp / (tp + fp)).abs() < 1e-12);
            } else {
                prop_assert!(m.precision.is_none());
            }
            if tp + fneg > 0.0 {
                prop_assert!((m.recall.unwrap() - tp / (tp + fneg)).abs() < 1e-12);
            }
            if tp > 0.0 {
                prop_assert!((m.f1 - 2.0 * tp / (2.0 * tp + fp + fneg)).abs() < 1e-12);
            } else {
                prop_assert_eq!(m.f1, 0.0);
            }
        }
    }
}
