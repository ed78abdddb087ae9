//! Live HTTP transport.
//!
//! Maps the four endpoints onto concrete providers:
//!
//! - `llm_complete`: an OpenAI-compatible `/chat/completions` endpoint,
//! - `web_search`: a Google Custom Search style JSON endpoint (`items[]`
//!   with `title`, `link`, `snippet`),
//! - `wiki_search` / `wiki_page`: the MediaWiki action API.
//!
//! Responses are normalized into the shapes the [`Dispatcher`] clients
//! expect, which is also what lands in transcripts. Credentials are read
//! from environment variables at send time and never enter a payload.
//!
//! [`Dispatcher`]: super::Dispatcher

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendRequest, Endpoint, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub llm_base_url: String,
    pub llm_api_key_env: String,
    pub search_url: String,
    pub search_api_key_env: String,
    pub search_engine_id_env: String,
    pub wiki_api_url: String,
    pub user_agent: String,
    pub timeout_secs: u64,
    /// Minimum spacing between calls to one provider, in milliseconds.
    pub min_interval_ms: HashMap<String, u64>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            llm_base_url: "https://api.openai.com/v1".into(),
            llm_api_key_env: "OPENAI_API_KEY".into(),
            search_url: "https://www.googleapis.com/customsearch/v1".into(),
            search_api_key_env: "HOPQA_SEARCH_API_KEY".into(),
            search_engine_id_env: "HOPQA_SEARCH_ENGINE_ID".into(),
            wiki_api_url: "https://en.wikipedia.org/w/api.php".into(),
            user_agent: concat!("hopqa/", env!("CARGO_PKG_VERSION")).into(),
            timeout_secs: 60,
            min_interval_ms: HashMap::new(),
        }
    }
}

pub struct HttpTransport {
    config: HttpConfig,
    agent: ureq::Agent,
    last_call: Mutex<HashMap<Endpoint, Instant>>,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .user_agent(config.user_agent.as_str())
            .http_status_as_error(false)
            .build();
        Self {
            config,
            agent: ureq::Agent::new_with_config(agent_config),
            last_call: Mutex::new(HashMap::new()),
        }
    }

    fn throttle(&self, endpoint: Endpoint) {
        let Some(&ms) = self.config.min_interval_ms.get(endpoint.as_str()) else {
            return;
        };
        let interval = Duration::from_millis(ms);
        let wait = {
            let mut last = self.last_call.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = match last.get(&endpoint) {
                Some(&prev) if prev + interval > now => prev + interval,
                _ => now,
            };
            last.insert(endpoint, slot);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn secret(&self, var: &str) -> Result<String, TransportError> {
        std::env::var(var)
            .map_err(|_| TransportError::network(format!("environment variable {var} is not set")))
    }

    fn llm(&self, payload: &Value) -> Result<String, TransportError> {
        let key = self.secret(&self.config.llm_api_key_env)?;
        let mut body = json!({
            "model": payload["model_id"],
            "messages": [
                {"role": "system", "content": payload["system_text"]},
                {"role": "user", "content": payload["user_text"]},
            ],
            "temperature": payload["temperature"],
        });
        if payload["response_hint"] == "json_object" {
            body["response_format"] = json!({"type": "json_object"});
        }
        let url = format!(
            "{}/chat/completions",
            self.config.llm_base_url.trim_end_matches('/')
        );
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body);
        let v = read_json(resp)?;
        let text = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| TransportError::network("chat response has no message content"))?;
        Ok(json!({ "text": text }).to_string())
    }

    fn web_search(&self, payload: &Value) -> Result<String, TransportError> {
        let key = self.secret(&self.config.search_api_key_env)?;
        let cx = self.secret(&self.config.search_engine_id_env)?;
        let query = payload["query"].as_str().unwrap_or_default();
        let limit = payload["limit"].as_u64().unwrap_or(10).to_string();
        let resp = self
            .agent
            .get(&self.config.search_url)
            .query("key", &key)
            .query("cx", &cx)
            .query("q", query)
            .query("num", &limit)
            .call();
        let v = read_json(resp)?;
        let items: Vec<Value> = v["items"]
            .as_array()
            .map(|items| {
                items
                    .iter()
                    .map(|it| {
                        json!({
                            "title": it["title"].as_str().unwrap_or_default(),
                            "link": it["link"].as_str().unwrap_or_default(),
                            "snippet": it["snippet"].as_str().unwrap_or_default(),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(Value::Array(items).to_string())
    }

    fn wiki_search(&self, payload: &Value) -> Result<String, TransportError> {
        let term = payload["term"].as_str().unwrap_or_default();
        let limit = payload["limit"].as_u64().unwrap_or(1).to_string();
        let resp = self
            .agent
            .get(&self.config.wiki_api_url)
            .query("action", "query")
            .query("list", "search")
            .query("srsearch", term)
            .query("srlimit", &limit)
            .query("format", "json")
            .call();
        let v = read_json(resp)?;
        let titles: Vec<Value> = v["query"]["search"]
            .as_array()
            .map(|hits| {
                hits.iter()
                    .filter_map(|h| h["title"].as_str().map(|t| Value::String(t.into())))
                    .collect()
            })
            .unwrap_or_default();
        Ok(Value::Array(titles).to_string())
    }

    fn wiki_page(&self, payload: &Value) -> Result<String, TransportError> {
        let title = payload["title"].as_str().unwrap_or_default();
        let resp = self
            .agent
            .get(&self.config.wiki_api_url)
            .query("action", "query")
            .query("prop", "extracts")
            .query("explaintext", "1")
            .query("redirects", "1")
            .query("formatversion", "2")
            .query("format", "json")
            .query("titles", title)
            .call();
        let v = read_json(resp)?;
        let page = &v["query"]["pages"][0];
        let text = if page.get("missing").is_some() {
            Value::Null
        } else {
            page["extract"].clone()
        };
        let resolved = page["title"].as_str().unwrap_or(title);
        Ok(json!({ "title": resolved, "text": text }).to_string())
    }
}

fn read_json(
    resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
) -> Result<Value, TransportError> {
    let mut resp = resp.map_err(|e| TransportError::network(e.to_string()))?;
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        let body = resp.body_mut().read_to_string().unwrap_or_default();
        let snippet: String = body.chars().take(200).collect();
        return Err(TransportError::http(status, snippet));
    }
    resp.body_mut()
        .read_json::<Value>()
        .map_err(|e| TransportError::network(format!("invalid JSON body: {e}")))
}

impl Transport for HttpTransport {
    fn send(&self, request: &BackendRequest) -> Result<String, TransportError> {
        self.throttle(request.endpoint);
        let payload = request.payload_value();
        match request.endpoint {
            Endpoint::LlmComplete => self.llm(&payload),
            Endpoint::WebSearch => self.web_search(&payload),
            Endpoint::WikiSearch => self.wiki_search(&payload),
            Endpoint::WikiPage => self.wiki_page(&payload),
        }
    }
}
