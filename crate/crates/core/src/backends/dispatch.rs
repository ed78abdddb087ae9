use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use super::{
    BackendError, BackendRequest, Cache, CacheEntry, Endpoint, Mode, Transcript, TranscriptEntry,
};

/// Error from a single network attempt. `status` carries the HTTP status
/// when the provider answered at all.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportError {
    pub status: Option<u16>,
    pub message: String,
}

impl TransportError {
    pub fn network(message: impl Into<String>) -> Self {
        Self {
            status: None,
            message: message.into(),
        }
    }

    pub fn http(status: u16, message: impl Into<String>) -> Self {
        Self {
            status: Some(status),
            message: message.into(),
        }
    }

    fn is_rate_limit(&self) -> bool {
        self.status == Some(429)
    }
}

impl std::fmt::Display for TransportError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.status {
            Some(s) => write!(f, "HTTP {s}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Sends a request to the real provider and returns the adapter-normalized
/// response text.
pub trait Transport: Send + Sync {
    fn send(&self, request: &BackendRequest) -> Result<String, TransportError>;
}

/// One retry with exponential backoff: the n-th retry waits `base * factor^(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base: Duration,
    pub factor: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 1,
            base: Duration::from_secs(1),
            factor: 4,
        }
    }
}

impl RetryPolicy {
    pub fn no_wait() -> Self {
        Self {
            base: Duration::ZERO,
            ..Self::default()
        }
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

/// Transport that refuses every call; used in replay mode so that any
/// attempted network access is loud.
struct NoNetwork;

impl Transport for NoNetwork {
    fn send(&self, request: &BackendRequest) -> Result<String, TransportError> {
        Err(TransportError::network(format!(
            "network access attempted in replay mode ({})",
            request.endpoint.as_str()
        )))
    }
}

pub struct Dispatcher {
    mode: Mode,
    transport: Arc<dyn Transport>,
    transcript: Option<Arc<Transcript>>,
    cache: Option<Cache>,
    cached_endpoints: HashSet<Endpoint>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for Dispatcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dispatcher")
            .field("mode", &self.mode)
            .field("cache", &self.cache)
            .field("retry", &self.retry)
            .finish()
    }
}

impl Dispatcher {
    pub fn live(transport: Arc<dyn Transport>) -> Self {
        Self {
            mode: Mode::Live,
            transport,
            transcript: None,
            cache: None,
            cached_endpoints: [
                Endpoint::WebSearch,
                Endpoint::WikiSearch,
                Endpoint::WikiPage,
            ]
            .into_iter()
            .collect(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn record(transport: Arc<dyn Transport>, transcript: Arc<Transcript>) -> Self {
        Self {
            mode: Mode::Record,
            transcript: Some(transcript),
            ..Self::live(transport)
        }
    }

    pub fn replay(transcript: Arc<Transcript>) -> Self {
        Self {
            mode: Mode::Replay,
            transcript: Some(transcript),
            ..Self::live(Arc::new(NoNetwork))
        }
    }

    /// Replay with an explicit transport; the transport is never called.
    /// Exists so tests can install a sentinel.
    pub fn replay_with_transport(
        transcript: Arc<Transcript>,
        transport: Arc<dyn Transport>,
    ) -> Self {
        Self {
            transport,
            ..Self::replay(transcript)
        }
    }

    pub fn with_cache(mut self, cache: Cache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Endpoints whose responses go through the cache (search and
    /// Wikipedia by default; LLM calls are not cached so that reprocessing
    /// a failed question can get a fresh answer).
    pub fn with_cached_endpoints(mut self, endpoints: impl IntoIterator<Item = Endpoint>) -> Self {
        self.cached_endpoints = endpoints.into_iter().collect();
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn transcript(&self) -> Option<&Arc<Transcript>> {
        self.transcript.as_ref()
    }

    pub fn dispatch(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let key = request.digest();
        if self.mode == Mode::Replay {
            let transcript = self
                .transcript
                .as_ref()
                .ok_or_else(|| BackendError::TranscriptMiss(key.clone()))?;
            return transcript.next_response(&key);
        }

        let cache = self
            .cache
            .as_ref()
            .filter(|_| self.cached_endpoints.contains(&request.endpoint));
        let cached = match cache {
            Some(c) => c.get(&key)?.map(|e| e.response),
            None => None,
        };
        let response = match cached {
            Some(r) => r,
            None => {
                let r = self.send_with_retry(request)?;
                if let Some(c) = cache {
                    c.put(&CacheEntry::now(key.clone(), r.clone()))?;
                }
                r
            }
        };

        if self.mode == Mode::Record {
            if let Some(t) = &self.transcript {
                t.record(TranscriptEntry::for_request(request, response.clone()))?;
            }
        }
        Ok(response)
    }

    fn send_with_retry(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let mut attempt = 0;
        loop {
            match self.transport.send(request) {
                Ok(r) => return Ok(r),
                Err(e) if attempt < self.retry.retries => {
                    attempt += 1;
                    let wait = self.retry.delay(attempt);
                    tracing::warn!(
                        "{} failed ({e}); retry {attempt} in {wait:?}",
                        request.endpoint.as_str()
                    );
                    if !wait.is_zero() {
                        std::thread::sleep(wait);
                    }
                }
                Err(e) if e.is_rate_limit() => {
                    return Err(BackendError::QuotaExceeded(e.to_string()))
                }
                Err(e) => return Err(BackendError::Failure(e.to_string())),
            }
        }
    }
}
