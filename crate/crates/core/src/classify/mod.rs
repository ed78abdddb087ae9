//! Routes questions to the direct or sequential path with a stacked
//! tree ensemble.

pub mod boosting;
pub mod features;
pub mod forest;
pub mod logistic;
pub mod stacking;
pub mod synthetic;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::QuestionKind;

pub use features::{
    extract_features, FeatureVector, HashedTfIdfEncoder, LinguisticFeatures, StructuralFeatures,
    TextEncoder, DEFAULT_EMBEDDING_DIM,
};
pub use stacking::{
    kind_for_probability, stack_probability, train, ClassifierModel, FoldRecord, TrainingConfig,
    TrainingReport,
};

/// Meta weights of a published fitted model, kept as a reference fixture.
pub const REFERENCE_META_WEIGHTS: [f64; 2] = [0.72, 0.28];

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error("malformed training data at line {line}: {detail}")]
    MalformedData { line: usize, detail: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ClassifyError {
    fn from(e: std::io::Error) -> Self {
        ClassifyError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    #[serde(rename = "text")]
    pub question_text: String,
    pub label: QuestionKind,
}

/// Parses `{"text": ..., "label": "direct"|"sequential"}` lines. Blank
/// lines are skipped.
pub fn parse_training_jsonl(text: &str) -> Result<Vec<TrainingExample>, ClassifyError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: TrainingExample =
            serde_json::from_str(line).map_err(|e| ClassifyError::MalformedData {
                line: i + 1,
                detail: e.to_string(),
            })?;
        if ex.question_text.trim().is_empty() {
            return Err(ClassifyError::MalformedData {
                line: i + 1,
                detail: "empty text".into(),
            });
        }
        out.push(ex);
    }
    Ok(out)
}

pub fn read_training_jsonl(path: &Path) -> Result<Vec<TrainingExample>, ClassifyError> {
    parse_training_jsonl(&std::fs::read_to_string(path)?)
}
