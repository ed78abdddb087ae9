//! Core domain types and the JSON-Lines trace format.
//!
//! A [`QuestionResult`] is the full trace of one answered (or failed)
//! question. It serializes to a single-line JSON object so a batch run is a
//! valid JSON-Lines file.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::token_count;

/// Maximum number of search snippets kept per hop.
pub const MAX_SNIPPETS: usize = 10;
/// Token budget for Wikipedia sentences in one hop's context.
pub const WIKI_TOKEN_BUDGET: usize = 300;
/// Simplified questions must stay strictly below this many tokens.
pub const SIMPLIFIED_TOKEN_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    Direct,
    Sequential,
}

impl std::fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuestionKind::Direct => f.write_str("direct"),
            QuestionKind::Sequential => f.write_str("sequential"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("simplified text has {0} tokens (limit is fewer than {SIMPLIFIED_TOKEN_LIMIT})")]
    SimplifiedTooLong(usize),
}

/// An input question and its routing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplified_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<QuestionKind>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyQuestion);
        }
        Ok(Self {
            id: id.into(),
            text,
            simplified_text: None,
            kind: None,
        })
    }

    pub fn set_simplified(&mut self, simplified: String) -> Result<(), ModelError> {
        let n = token_count(&simplified);
        if n >= SIMPLIFIED_TOKEN_LIMIT {
            return Err(ModelError::SimplifiedTooLong(n));
        }
        self.simplified_text = Some(simplified);
        Ok(())
    }

    /// The text downstream stages work on: the simplified form when present.
    pub fn effective_text(&self) -> &str {
        self.simplified_text.as_deref().unwrap_or(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionStep {
    pub index: usize,
    pub sub_question: String,
    pub sub_query: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionPlan {
    pub question_id: String,
    pub steps: Vec<DecompositionStep>,
    pub initial_anchor: String,
}

impl DecompositionPlan {
    pub fn hop_count(&self) -> usize {
        self.steps.len()
    }
}

/// Fused retrieval context for one hop: search snippets first, then the
/// budget-limited Wikipedia sentences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub snippets: Vec<String>,
    pub wiki_sentences: Vec<String>,
    pub wiki_token_count: usize,
}

impl ContextBundle {
    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty() && self.wiki_sentences.is_empty()
    }

    /// Snippets followed by Wikipedia sentences.
    pub fn items(&self) -> impl Iterator<Item = &str> {
        self.snippets
            .iter()
            .chain(self.wiki_sentences.iter())
            .map(String::as_str)
    }

    fn check(&self) -> Result<(), String> {
        if self.snippets.len() > MAX_SNIPPETS {
            return Err(format!(
                "context has {} snippets (max {MAX_SNIPPETS})",
                self.snippets.len()
            ));
        }
        let actual: usize = self.wiki_sentences.iter().map(|s| token_count(s)).sum();
        if actual != self.wiki_token_count {
            return Err(format!(
                "wiki_token_count is {} but sentences hold {actual} tokens",
                self.wiki_token_count
            ));
        }
        if actual > WIKI_TOKEN_BUDGET {
            return Err(format!(
                "wiki context has {actual} tokens (max {WIKI_TOKEN_BUDGET})"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerPair {
    pub short: String,
    pub long: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopRecord {
    pub index: usize,
    pub sub_question: String,
    pub sub_query: String,
    pub anchor_in: String,
    pub context: ContextBundle,
    pub raw_answer: AnswerPair,
    pub normalized_short: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultStatus {
    Answered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub question_id: String,
    pub kind: QuestionKind,
    pub hops: Vec<HopRecord>,
    pub final_short: String,
    pub final_long: String,
    pub status: ResultStatus,
    pub failure_reason: Option<String>,
}

impl QuestionResult {
    /// Builds an answered result whose final answers come from the last hop.
    pub fn answered(question_id: String, kind: QuestionKind, hops: Vec<HopRecord>) -> Self {
        let (final_short, final_long) = hops
            .last()
            .map(|h| (h.normalized_short.clone(), h.raw_answer.long.clone()))
            .unwrap_or_default();
        Self {
            question_id,
            kind,
            hops,
            final_short,
            final_long,
            status: ResultStatus::Answered,
            failure_reason: None,
        }
    }

    /// A failed result keeps the hops completed so far but reports no answer.
    pub fn failed(
        question_id: String,
        kind: QuestionKind,
        hops: Vec<HopRecord>,
        reason: impl Into<String>,
    ) -> Self {
        Self {
            question_id,
            kind,
            hops,
            final_short: String::new(),
            final_long: String::new(),
            status: ResultStatus::Failed,
            failure_reason: Some(reason.into()),
        }
    }

    pub fn is_answered(&self) -> bool {
        self.status == ResultStatus::Answered
    }

    /// Checks the record invariants; the message names the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.question_id.trim().is_empty() {
            return Err("question_id: empty".into());
        }
        for (pos, hop) in self.hops.iter().enumerate() {
            if hop.index != pos + 1 {
                return Err(format!(
                    "hops: non-contiguous indices (position {} has index {})",
                    pos + 1,
                    hop.index
                ));
            }
            hop.context
                .check()
                .map_err(|e| format!("hops[{}].context: {e}", pos))?;
        }
        match self.status {
            ResultStatus::Answered => {
                let last = self
                    .hops
                    .last()
                    .ok_or_else(|| "hops: answered result has no hops".to_string())?;
                if last.raw_answer.short.is_empty() || last.raw_answer.long.is_empty() {
                    return Err("hops: answered result has an empty raw answer".into());
                }
                if self.final_short != last.normalized_short {
                    return Err("final_short: differs from the last hop's normalized_short".into());
                }
                if self.final_long != last.raw_answer.long {
                    return Err("final_long: differs from the last hop's long answer".into());
                }
            }
            ResultStatus::Failed => {
                if self.failure_reason.is_none() {
                    return Err("failure_reason: missing on a failed result".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("schema violation at `{field}`: {detail}")]
    SchemaViolation { field: String, detail: String },
}

impl RecordError {
    fn schema(field: impl Into<String>, detail: impl Into<String>) -> Self {
        RecordError::SchemaViolation {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

const REQUIRED_FIELDS: &[&str] = &[
    "question_id",
    "kind",
    "hops",
    "final_short",
    "final_long",
    "status",
    "failure_reason",
];

/// One single-line JSON object.
pub fn serialize_result(result: &QuestionResult) -> String {
    serde_json::to_string(result).expect("QuestionResult serialization is infallible")
}

pub fn deserialize_result(record: &str) -> Result<QuestionResult, RecordError> {
    let value: serde_json::Value =
        serde_json::from_str(record).map_err(|e| RecordError::MalformedRecord(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| RecordError::MalformedRecord("record is not a JSON object".into()))?;
    if let Some(missing) = REQUIRED_FIELDS.iter().find(|f| !obj.contains_key(**f)) {
        return Err(RecordError::schema(*missing, "missing field"));
    }
    let result: QuestionResult = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| "record".into());
        RecordError::schema(field, msg)
    })?;
    result.validate().map_err(|detail| {
        let field = detail.split(':').next().unwrap_or("record").to_string();
        RecordError::schema(field, detail)
    })?;
    Ok(result)
}
