//! Out-of-fold stacking of a random forest and boosted trees under a
//! logistic meta-learner.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::boosting::{sigmoid, BoostParams, BoostedTrees};
use super::features::{extract_features, FeatureVector, HashedTfIdfEncoder, DEFAULT_EMBEDDING_DIM};
use super::forest::{ForestParams, RandomForest};
use super::logistic::fit_logistic;
use super::{ClassifyError, TrainingExample};
use crate::model::QuestionKind;
use crate::par;

pub const FORMAT_VERSION: u32 = 1;
/// Meta outputs are clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub folds: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    pub threshold: f64,
    /// Feed the raw feature vector to the meta-learner next to the base
    /// probabilities. Off by default.
    pub include_raw_features: bool,
    pub meta_l2: f64,
    pub boost_lambda: f64,
    pub min_child_weight: f64,
    pub min_samples_leaf: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 6,
            learning_rate: 0.1,
            folds: 5,
            seed: 42,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            threshold: 0.5,
            include_raw_features: false,
            meta_l2: 1.0,
            boost_lambda: 1.0,
            min_child_weight: 1.0,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub format_version: u32,
    pub encoder: HashedTfIdfEncoder,
    pub base_forest: RandomForest,
    pub base_boosted: BoostedTrees,
    /// `(forest, boosted)` weights, followed by raw-feature weights when
    /// `include_raw_features` is set.
    pub meta_weights: Vec<f64>,
    pub meta_bias: f64,
    pub threshold: f64,
    pub include_raw_features: bool,
}

/// Bookkeeping for one fold of the out-of-fold construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_rows: Vec<usize>,
    pub holdout_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub folds_used: usize,
    pub folds: Vec<FoldRecord>,
    /// For each training row, the fold whose base learners produced its
    /// meta-learner input.
    pub meta_source_fold: Vec<usize>,
    /// Out-of-fold `(forest, boosted)` probabilities fed to the meta-learner.
    pub oof_probabilities: Vec<[f64; 2]>,
    pub warnings: Vec<String>,
}

impl TrainingReport {
    /// Checks that no meta-learner input came from a base learner that saw
    /// the row during training, and that every row was held out exactly once.
    pub fn verify_out_of_fold(&self) -> Result<(), String> {
        let n = self.meta_source_fold.len();
        let mut held = vec![0usize; n];
        for f in &self.folds {
            for &r in &f.holdout_rows {
                held[r] += 1;
            }
        }
        if let Some(r) = held.iter().position(|&c| c != 1) {
            return Err(format!("row {r} held out {} times", held[r]));
        }
        for (row, &fold) in self.meta_source_fold.iter().enumerate() {
            let rec = self
                .folds
                .iter()
                .find(|f| f.fold == fold)
                .ok_or_else(|| format!("row {row} refers to unknown fold {fold}"))?;
            if rec.train_rows.binary_search(&row).is_ok() {
                return Err(format!("row {row} is in the training part of fold {fold}"));
            }
            if rec.holdout_rows.binary_search(&row).is_err() {
                return Err(format!("row {row} is not held out by fold {fold}"));
            }
        }
        Ok(())
    }
}

fn class_counts(labels: &[QuestionKind]) -> (usize, usize) {
    let seq = labels
        .iter()
        .filter(|k| **k == QuestionKind::Sequential)
        .count();
    (labels.len() - seq, seq)
}

/// Assigns each row to one of `k` folds, keeping class proportions.
pub fn stratified_folds(labels: &[QuestionKind], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for kind in [QuestionKind::Direct, QuestionKind::Sequential] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == kind).collect();
        rows.shuffle(&mut rng);
        for (j, r) in rows.into_iter().enumerate() {
            assignment[r] = j % k;
        }
    }
    assignment
}

fn label_value(k: QuestionKind) -> f64 {
    match k {
        QuestionKind::Sequential => 1.0,
        QuestionKind::Direct => 0.0,
    }
}

struct BaseLearners {
    forest: RandomForest,
    boosted: BoostedTrees,
}

fn fit_bases(rows: &[Vec<f64>], y: &[f64], cfg: &TrainingConfig, seed: u64) -> BaseLearners {
    let forest = RandomForest::fit(
        rows,
        y,
        ForestParams {
            n_trees: cfg.n_trees,
            max_depth: cfg.max_depth,
            min_samples_leaf: cfg.min_samples_leaf,
            seed,
        },
    );
    let boosted = BoostedTrees::fit(
        rows,
        y,
        BoostParams {
            n_rounds: cfg.n_trees,
            max_depth: cfg.max_depth,
            learning_rate: cfg.learning_rate,
            lambda: cfg.boost_lambda,
            min_child_weight: cfg.min_child_weight,
            seed: seed ^ 0x9e37_79b9_7f4a_7c15,
        },
    );
    BaseLearners { forest, boosted }
}

fn meta_input(h: [f64; 2], raw: Option<&[f64]>) -> Vec<f64> {
    let mut v = h.to_vec();
    if let Some(raw) = raw {
        v.extend_from_slice(raw);
    }
    v
}

/// Trains the full ensemble.
///
/// Needs at least two examples of each class. When a class has fewer
/// examples than `cfg.folds`, training falls back to two folds and records
/// a warning in the report.
pub fn train(
    examples: &[TrainingExample],
    cfg: &TrainingConfig,
) -> Result<(ClassifierModel, TrainingReport), ClassifyError> {
    if !(cfg.threshold > 0.0 && cfg.threshold < 1.0) {
        return Err(ClassifyError::InvalidConfig(format!(
            "threshold must lie in (0, 1), got {}",
            cfg.threshold
        )));
    }
    if cfg.folds < 2 {
        return Err(ClassifyError::InvalidConfig(
            "folds must be at least 2".into(),
        ));
    }
    let labels: Vec<QuestionKind> = examples.iter().map(|e| e.label).collect();
    let (n_direct, n_seq) = class_counts(&labels);
    let smallest = n_direct.min(n_seq);
    if smallest < 2 {
        return Err(ClassifyError::InsufficientData(format!(
            "need at least 2 examples per class, got {n_direct} direct and {n_seq} sequential"
        )));
    }
    let mut warnings = Vec::new();
    let k = if smallest < cfg.folds {
        let msg = format!(
            "smallest class has {smallest} examples, fewer than {} folds; using 2 folds",
            cfg.folds
        );
        tracing::warn!("{msg}");
        warnings.push(msg);
        2
    } else {
        cfg.folds
    };

    let texts: Vec<&str> = examples.iter().map(|e| e.question_text.as_str()).collect();
    let encoder = HashedTfIdfEncoder::fit(cfg.embedding_dim, &texts);
    let rows: Vec<Vec<f64>> = par::map(&texts, |t| extract_features(t, &encoder).to_dense());
    let y: Vec<f64> = labels.iter().map(|&l| label_value(l)).collect();

    let assignment = stratified_folds(&labels, k, cfg.seed);
    let fold_outputs = par::map_range(k, |fold| {
        let train_rows: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] != fold).collect();
        let holdout_rows: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] == fold).collect();
        let x: Vec<Vec<f64>> = train_rows.iter().map(|&i| rows[i].clone()).collect();
        let yy: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();
        let bases = fit_bases(&x, &yy, cfg, cfg.seed.wrapping_add(1 + fold as u64));
        let preds: Vec<[f64; 2]> = holdout_rows
            .iter()
            .map(|&i| {
                [
                    bases.forest.predict_proba(&rows[i]),
                    bases.boosted.predict_proba(&rows[i]),
                ]
            })
            .collect();
        (
            FoldRecord {
                fold,
                train_rows,
                holdout_rows,
            },
            preds,
        )
    });

    let mut oof = vec![[0.0; 2]; rows.len()];
    let mut source = vec![usize::MAX; rows.len()];
    let mut folds = Vec::with_capacity(k);
    for (rec, preds) in fold_outputs {
        for (&row, p) in rec.holdout_rows.iter().zip(preds) {
            oof[row] = p;
            source[row] = rec.fold;
        }
        folds.push(rec);
    }

    let meta_x: Vec<Vec<f64>> = oof
        .iter()
        .zip(&rows)
        .map(|(h, raw)| meta_input(*h, cfg.include_raw_features.then_some(raw.as_slice())))
        .collect();
    let (meta_weights, meta_bias) = fit_logistic(&meta_x, &y, cfg.meta_l2, 100);

    let bases = fit_bases(&rows, &y, cfg, cfg.seed);
    let model = ClassifierModel {
        format_version: FORMAT_VERSION,
        encoder,
        base_forest: bases.forest,
        base_boosted: bases.boosted,
        meta_weights,
        meta_bias,
        threshold: cfg.threshold,
        include_raw_features: cfg.include_raw_features,
    };
    let report = TrainingReport {
        folds_used: k,
        folds,
        meta_source_fold: source,
        oof_probabilities: oof,
        warnings,
    };
    Ok((model, report))
}

/// `σ(W · h + b)` clamped strictly inside (0, 1).
pub fn stack_probability(weights: &[f64], bias: f64, h: &[f64]) -> f64 {
    let z: f64 = weights.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + bias;
    sigmoid(z).clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Sequential iff `p >= threshold`.
pub fn kind_for_probability(p: f64, threshold: f64) -> QuestionKind {
    if p >= threshold {
        QuestionKind::Sequential
    } else {
        QuestionKind::Direct
    }
}

impl ClassifierModel {
    /// Input width expected by the base learners.
    pub fn feature_dim(&self) -> usize {
        self.base_forest.n_features
    }

    pub fn features(&self, question_text: &str) -> FeatureVector {
        extract_features(question_text, &self.encoder)
    }

    fn dense_checked(&self, features: &FeatureVector) -> Result<Vec<f64>, ClassifyError> {
        let dense = features.to_dense();
        if dense.len() != self.feature_dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.feature_dim(),
                got: dense.len(),
            });
        }
        Ok(dense)
    }

    /// `(forest, boosted)` sequential-class probabilities.
    pub fn base_probabilities(&self, features: &FeatureVector) -> Result<[f64; 2], ClassifyError> {
        let x = self.dense_checked(features)?;
        Ok([
            self.base_forest.predict_proba(&x),
            self.base_boosted.predict_proba(&x),
        ])
    }

    /// Meta-learner output for given base probabilities (and raw features
    /// when the model was trained with them).
    pub fn meta_probability(&self, h: [f64; 2], raw: Option<&[f64]>) -> f64 {
        let input = meta_input(h, if self.include_raw_features { raw } else { None });
        stack_probability(&self.meta_weights, self.meta_bias, &input)
    }

    pub fn predict_proba(&self, features: &FeatureVector) -> Result<f64, ClassifyError> {
        let x = self.dense_checked(features)?;
        let h = [
            self.base_forest.predict_proba(&x),
            self.base_boosted.predict_proba(&x),
        ];
        Ok(self.meta_probability(h, Some(&x)))
    }

    pub fn classify(&self, question_text: &str) -> Result<QuestionKind, ClassifyError> {
        let p = self.predict_proba(&self.features(question_text))?;
        Ok(kind_for_probability(p, self.threshold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| ClassifyError::InvalidModel(e.to_string()))?;
        if model.format_version != FORMAT_VERSION {
            return Err(ClassifyError::InvalidModel(format!(
                "unsupported format_version {}",
                model.format_version
            )));
        }
        let expected = if model.include_raw_features {
            2 + model.feature_dim()
        } else {
            2
        };
        if model.meta_weights.len() != expected {
            return Err(ClassifyError::InvalidModel(format!(
                "expected {expected} meta weights, found {}",
                model.meta_weights.len()
            )));
        }
        if model.base_boosted.n_features != model.feature_dim()
            || model.encoder.idf.len() != model.encoder.dim
        {
            return Err(ClassifyError::InvalidModel(
                "inconsistent feature dimensions".into(),
            ));
        }
        if !(model.threshold > 0.0 && model.threshold < 1.0) {
            return Err(ClassifyError::InvalidModel(
                "threshold outside (0, 1)".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        crate::backends::write_atomic(dir, path, self.to_json().as_bytes())
            .map_err(|e| ClassifyError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fraction of `examples` whose predicted kind matches the label.
pub fn accuracy<F>(examples: &[TrainingExample], mut predict: F) -> f64
where
    F: FnMut(&str) -> QuestionKind,
{
    if examples.is_empty() {
        return 0.0;
    }
    let hits = examples
        .iter()
        .filter(|e| predict(&e.question_text) == e.label)
        .count();
    hits as f64 / examples.len() as f64
}

/// Distinct rows that fed any base learner of the final model.
pub fn training_rows(report: &TrainingReport) -> BTreeSet<usize> {
    report
        .folds
        .iter()
        .flat_map(|f| f.train_rows.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(text: &str, label: QuestionKind) -> TrainingExample {
        TrainingExample {
            question_text: text.into(),
            label,
        }
    }

    #[test]
    fn sigmoid_fixtures() {
        assert!((stack_probability(&[1.0, 1.0], 0.0, &[0.5, 0.5]) - 0.731_058_578_6).abs() < 1e-10);
        assert_eq!(stack_probability(&[0.0, 0.0], 0.0, &[0.9, 0.1]), 0.5);
    }

    #[test]
    fn tie_goes_to_sequential() {
        assert_eq!(kind_for_probability(0.5, 0.5), QuestionKind::Sequential);
        assert_eq!(kind_for_probability(0.9, 0.5), QuestionKind::Sequential);
        assert_eq!(kind_for_probability(0.1, 0.5), QuestionKind::Direct);
    }

    #[test]
    fn one_sequential_example_is_insufficient() {
        let mut data: Vec<_> = (0..10)
            .map(|i| ex(&format!("What is item {i}?"), QuestionKind::Direct))
            .collect();
        data.push(ex(
            "Which gene that causes X sits where?",
            QuestionKind::Sequential,
        ));
        assert!(matches!(
            train(&data, &TrainingConfig::default()),
            Err(ClassifyError::InsufficientData(_))
        ));
    }

    #[test]
    fn small_class_falls_back_to_two_folds() {
        let mut data: Vec<_> = (0..8)
            .map(|i| ex(&format!("What is item {i}?"), QuestionKind::Direct))
            .collect();
        for i in 0..3 {
            data.push(ex(
                &format!("Which chromosome carries the gene that is associated with disease {i}?"),
                QuestionKind::Sequential,
            ));
        }
        let cfg = TrainingConfig {
            n_trees: 5,
            embedding_dim: 16,
            ..TrainingConfig::default()
        };
        let (model, report) = train(&data, &cfg).unwrap();
        assert_eq!(report.folds_used, 2);
        assert_eq!(report.warnings.len(), 1);
        report.verify_out_of_fold().unwrap();
        assert_eq!(model.meta_weights.len(), 2);
    }

    #[test]
    fn leak_check_detects_tampering() {
        let mut report = TrainingReport {
            folds_used: 2,
            folds: vec![
                FoldRecord {
                    fold: 0,
                    train_rows: vec![1],
                    holdout_rows: vec![0],
                },
                FoldRecord {
                    fold: 1,
                    train_rows: vec![0],
                    holdout_rows: vec![1],
                },
            ],
            meta_source_fold: vec![0, 1],
            oof_probabilities: vec![[0.5; 2]; 2],
            warnings: vec![],
        };
        report.verify_out_of_fold().unwrap();
        report.meta_source_fold[0] = 1;
        assert!(report.verify_out_of_fold().is_err());
    }

    #[test]
    fn stratification_balances_classes() {
        let labels: Vec<QuestionKind> = (0..50)
            .map(|i| {
                if i % 5 == 0 {
                    QuestionKind::Sequential
                } else {
                    QuestionKind::Direct
                }
            })
            .collect();
        let a = stratified_folds(&labels, 5, 7);
        for f in 0..5 {
            let seq = (0..50)
                .filter(|&i| a[i] == f && labels[i] == QuestionKind::Sequential)
                .count();
            assert_eq!(seq, 2);
        }
        assert_eq!(a, stratified_folds(&labels, 5, 7));
    }
}
