//! Run configuration, read from a single JSON document.
//!
//! Every field is optional in the file. Relative paths are resolved against
//! the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{HttpConfig, Mode};
use crate::classify::{TrainingConfig, DEFAULT_EMBEDDING_DIM};
use crate::decompose::DEFAULT_MAX_HOPS;
use crate::generate::{HopSettings, DEFAULT_PROMPT_CHAR_BUDGET};
use crate::model::{MAX_SNIPPETS, WIKI_TOKEN_BUDGET};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(String, String),
    #[error("invalid config {0}: {1}")]
    Invalid(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub decompose_model: String,
    pub answer_model: String,
    pub temperature: f64,
    pub search_limit: usize,
    pub wiki_articles: usize,
    pub wiki_token_budget: usize,
    pub max_hops: usize,
    /// Overrides the threshold stored in the classifier model.
    pub classifier_threshold: Option<f64>,
    pub classifier_model: Option<PathBuf>,
    pub embedding_dim: usize,
    pub reprocess_rounds: usize,
    pub workers: usize,
    /// Questions per incremental output write.
    pub chunk_size: usize,
    pub prompt_char_budget: usize,
    pub title_guard: bool,
    pub template_dir: Option<PathBuf>,
    pub mode: Mode,
    pub transcript: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub cache_ttl_secs: Option<u64>,
    pub retry_base_ms: u64,
    pub retry_factor: u32,
    pub retries: u32,
    pub http: HttpConfig,
    pub training: TrainingConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            decompose_model: "gpt-4o-mini".into(),
            answer_model: "gpt-4o".into(),
            temperature: 0.0,
            search_limit: MAX_SNIPPETS,
            wiki_articles: 1,
            wiki_token_budget: WIKI_TOKEN_BUDGET,
            max_hops: DEFAULT_MAX_HOPS,
            classifier_threshold: None,
            classifier_model: None,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            reprocess_rounds: 1,
            workers: 4,
            chunk_size: 16,
            prompt_char_budget: DEFAULT_PROMPT_CHAR_BUDGET,
            title_guard: true,
            template_dir: None,
            mode: Mode::Live,
            transcript: None,
            cache_dir: None,
            cache_ttl_secs: None,
            retry_base_ms: 1000,
            retry_factor: 4,
            retries: 1,
            http: HttpConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| ConfigError::Invalid(origin.into(), e.to_string()))?;
        cfg.validate()
            .map_err(|e| ConfigError::Invalid(origin.into(), e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Makes every relative path absolute with respect to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.classifier_model,
            &mut self.template_dir,
            &mut self.transcript,
            &mut self.cache_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=MAX_SNIPPETS).contains(&self.search_limit) {
            return Err(format!("search_limit must be in 1..={MAX_SNIPPETS}"));
        }
        if self.wiki_token_budget > WIKI_TOKEN_BUDGET {
            return Err(format!(
                "wiki_token_budget must be at most {WIKI_TOKEN_BUDGET}"
            ));
        }
        if self.max_hops == 0 {
            return Err("max_hops must be at least 1".into());
        }
        if self.workers == 0 || self.chunk_size == 0 {
            return Err("workers and chunk_size must be positive".into());
        }
        if let Some(t) = self.classifier_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err("classifier_threshold must lie in (0, 1)".into());
            }
        }
        Ok(())
    }

    pub fn hop_settings(&self) -> HopSettings {
        HopSettings {
            answer_model: self.answer_model.clone(),
            temperature: self.temperature,
            search_limit: self.search_limit,
            wiki_articles: self.wiki_articles,
            wiki_token_budget: self.wiki_token_budget,
            prompt_char_budget: self.prompt_char_budget,
            title_guard: self.title_guard,
        }
    }

    /// Training settings with the run-level embedding dimension and
    /// threshold applied.
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            embedding_dim: self.embedding_dim,
            threshold: self.classifier_threshold.unwrap_or(self.training.threshold),
            ..self.training.clone()
        }
    }
}
