//! Adapters for the external services the pipeline talks to: a chat LLM, a
//! web search engine and Wikipedia.
//!
//! Every call is expressed as a [`BackendRequest`] whose payload is
//! canonical JSON, so the request digest is stable. A [`Dispatcher`] routes
//! requests according to a [`Mode`]:
//!
//! - `Live` sends to the network (through the response cache when set),
//! - `Record` does the same and appends each exchange to a transcript,
//! - `Replay` reads the transcript only and never touches the network.
//!
//! Stages of the pipeline depend on the [`LanguageModel`], [`SearchEngine`]
//! and [`WikiClient`] traits rather than on the dispatcher, so tests can
//! plug in scripted doubles.

mod cache;
mod dispatch;
mod http;
mod transcript;

pub(crate) use cache::write_atomic;
pub use cache::{Cache, CacheEntry};
pub use dispatch::{Dispatcher, RetryPolicy, Transport, TransportError};
pub use http::{HttpConfig, HttpTransport};
pub use transcript::{Transcript, TranscriptEntry};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::retrieve::SearchResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    LlmComplete,
    WebSearch,
    WikiSearch,
    WikiPage,
}

impl Endpoint {
    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::LlmComplete => "llm_complete",
            Endpoint::WebSearch => "web_search",
            Endpoint::WikiSearch => "wiki_search",
            Endpoint::WikiPage => "wiki_page",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Live,
    Record,
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!(
                "unknown mode `{other}` (expected live, record or replay)"
            )),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("backend failure: {0}")]
    Failure(String),
    #[error("provider quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("no transcript entry for request digest {0}")]
    TranscriptMiss(String),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("unexpected response payload: {0}")]
    BadResponse(String),
}

/// One call to an external service.
///
/// `payload` is canonical JSON (sorted keys, no insignificant whitespace).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendRequest {
    pub endpoint: Endpoint,
    pub payload: String,
    pub model_id: Option<String>,
}

impl BackendRequest {
    pub fn new(endpoint: Endpoint, payload: &serde_json::Value, model_id: Option<String>) -> Self {
        Self {
            endpoint,
            payload: canonical_json(payload),
            model_id,
        }
    }

    /// Parses and canonicalizes an arbitrary JSON payload text.
    pub fn from_text(
        endpoint: Endpoint,
        payload: &str,
        model_id: Option<String>,
    ) -> Result<Self, serde_json::Error> {
        let value: serde_json::Value = serde_json::from_str(payload)?;
        Ok(Self::new(endpoint, &value, model_id))
    }

    /// Hex SHA-256 over endpoint, model id and canonical payload.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.endpoint.as_str().as_bytes());
        h.update(b"\n");
        h.update(self.model_id.as_deref().unwrap_or("").as_bytes());
        h.update(b"\n");
        h.update(self.payload.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn payload_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.payload).unwrap_or(serde_json::Value::Null)
    }
}

/// serde_json's map is ordered by key, so compact serialization of a parsed
/// value is canonical.
pub fn canonical_json(value: &serde_json::Value) -> String {
    serde_json::to_string(value).expect("JSON values always serialize")
}

/// A chat-completion request in the shape every LLM adapter accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub model_id: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub response_hint: Option<String>,
    /// Name of the prompt template that produced the request. Not part of
    /// the wire payload; lets test doubles count calls per prompt.
    pub label: String,
}

impl LlmRequest {
    pub fn to_backend_request(&self) -> BackendRequest {
        let payload = serde_json::json!({
            "model_id": self.model_id,
            "system_text": self.system_text,
            "user_text": self.user_text,
            "temperature": self.temperature,
            "response_hint": self.response_hint,
        });
        BackendRequest::new(Endpoint::LlmComplete, &payload, Some(self.model_id.clone()))
    }
}

pub trait LanguageModel: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, BackendError>;
}

pub trait SearchEngine: Send + Sync {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchResult>, BackendError>;
}

pub trait WikiClient: Send + Sync {
    /// Page titles ranked by the provider for `term`.
    fn search_titles(&self, term: &str, limit: usize) -> Result<Vec<String>, BackendError>;
    /// Plain text of a page, `None` when the page does not exist.
    fn page_text(&self, title: &str) -> Result<Option<String>, BackendError>;
}

impl LanguageModel for Dispatcher {
    fn complete(&self, request: &LlmRequest) -> Result<String, BackendError> {
        let raw = self.dispatch(&request.to_backend_request())?;
        let v: serde_json::Value =
            serde_json::from_str(&raw).map_err(|e| BackendError::BadResponse(e.to_string()))?;
        v.get("text")
            .and_then(|t| t.as_str())
            .map(str::to_string)
            .ok_or_else(|| BackendError::BadResponse("LLM response lacks `text`".into()))
    }
}

impl SearchEngine for Dispatcher {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<SearchResult>, BackendError> {
        let req = BackendRequest::new(
            Endpoint::WebSearch,
            &serde_json::json!({ "query": query, "limit": limit }),
            None,
        );
        let raw = self.dispatch(&req)?;
        serde_json::from_str(&raw).map_err(|e| BackendError::BadResponse(e.to_string()))
    }
}

impl WikiClient for Dispatcher {
    fn search_titles(&self, term: &str, limit: usize) -> Result<Vec<String>, BackendError> {
        let req = BackendRequest::new(
            Endpoint::WikiSearch,
            &serde_json::json!({ "term": term, "limit": limit }),
            None,
        );
        let raw = self.dispatch(&req)?;
        serde_json::from_str(&raw).map_err(|e| BackendError::BadResponse(e.to_string()))
    }

    fn page_text(&self, title: &str) -> Result<Option<String>, BackendError> {
        let req = BackendRequest::new(
            Endpoint::WikiPage,
            &serde_json::json!({ "title": title }),
            None,
        );
        let raw = self.dispatch(&req)?;
        let v: serde_json::Value =
            serde_json::from_str(&raw).map_err(|e| BackendError::BadResponse(e.to_string()))?;
        Ok(v.get("text").and_then(|t| t.as_str()).map(str::to_string))
    }
}
