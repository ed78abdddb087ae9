//! Per-hop answer generation and the retrieval-to-answer hop runner.

use thiserror::Error;

use crate::backends::{BackendError, LanguageModel, LlmRequest, SearchEngine, WikiClient};
use crate::model::{AnswerPair, ContextBundle, DecompositionStep, HopRecord, WIKI_TOKEN_BUDGET};
use crate::normalize::{infer_answer_kind, normalize, AnswerKind, NormalizeError};
use crate::prompt::{correction_note, extract_json, Prompt, PromptError, PromptTemplate};
use crate::retrieve::{
    assemble_context_with_budget, build_search_query, fetch_wikipedia, rank_sentences_tfidf,
    search, select_top_sentences, split_sentences,
};

pub const DEFAULT_PROMPT_CHAR_BUDGET: usize = 16_000;
pub const EMPTY_CONTEXT_MARKER: &str = "Retrieval context: (none)";

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("malformed answer: {0}")]
    MalformedAnswer(String),
    #[error("prompt has {len} characters, over the budget of {budget}")]
    PromptTooLong { len: usize, budget: usize },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Error, PartialEq)]
#[error("hop {index}: {source}")]
pub struct HopError {
    pub index: usize,
    pub source: GenerateError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerRequest {
    pub sub_question: String,
    pub sub_query: String,
    pub anchor: String,
    pub context: ContextBundle,
}

/// Numbered context list, snippets first.
pub fn render_context(context: &ContextBundle) -> String {
    if context.is_empty() {
        return EMPTY_CONTEXT_MARKER.to_string();
    }
    let mut out = String::from("Retrieval context:");
    for (i, item) in context.items().enumerate() {
        out.push_str(&format!("\n{}. {item}", i + 1));
    }
    out
}

pub fn render_answer_prompt(
    request: &AnswerRequest,
    template: &PromptTemplate,
    char_budget: usize,
) -> Result<Prompt, GenerateError> {
    let context = render_context(&request.context);
    let anchor = if request.anchor.trim().is_empty() {
        "(none)"
    } else {
        request.anchor.as_str()
    };
    let prompt = template.render(&[
        ("sub_question", request.sub_question.as_str()),
        ("sub_query", request.sub_query.as_str()),
        ("anchor", anchor),
        ("context", context.as_str()),
    ])?;
    let len = prompt.char_len();
    if len > char_budget {
        return Err(GenerateError::PromptTooLong {
            len,
            budget: char_budget,
        });
    }
    Ok(prompt)
}

/// Parses an answer reply: a JSON object with exactly the keys
/// `long_answer` and `short_answer`, both non-empty strings.
pub fn parse_answer(reply: &str) -> Result<AnswerPair, String> {
    let value = extract_json(reply).ok_or("reply is not JSON")?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    if obj.len() != 2 || !obj.contains_key("long_answer") || !obj.contains_key("short_answer") {
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        return Err(format!(
            "expected exactly the keys long_answer and short_answer, got {keys:?}"
        ));
    }
    let field = |k: &str| match obj.get(k).and_then(|v| v.as_str()).map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        Some(_) => Err(format!("{k} is empty")),
        None => Err(format!("{k} is not a string")),
    };
    Ok(AnswerPair {
        long: field("long_answer")?,
        short: field("short_answer")?,
    })
}

pub fn generate_answer(
    llm: &dyn LanguageModel,
    model_id: &str,
    temperature: f64,
    prompt: &Prompt,
) -> Result<AnswerPair, GenerateError> {
    let request = |extra: &str| LlmRequest {
        model_id: model_id.to_string(),
        system_text: prompt.system_text.clone(),
        user_text: format!("{}{extra}", prompt.user_text),
        temperature,
        response_hint: Some("json".into()),
        label: prompt.name.clone(),
    };
    let first = llm.complete(&request(""))?;
    match parse_answer(&first) {
        Ok(pair) => Ok(pair),
        Err(problem) => {
            tracing::debug!("answer reply rejected ({problem}); re-prompting");
            let note = correction_note("a JSON object with long_answer and short_answer", &problem);
            let second = llm.complete(&request(&note))?;
            parse_answer(&second).map_err(GenerateError::MalformedAnswer)
        }
    }
}

/// Backends a hop talks to.
#[derive(Clone, Copy)]
pub struct HopBackends<'a> {
    pub answerer: &'a dyn LanguageModel,
    pub search: &'a dyn SearchEngine,
    pub wiki: &'a dyn WikiClient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopSettings {
    pub answer_model: String,
    pub temperature: f64,
    pub search_limit: usize,
    pub wiki_articles: usize,
    pub wiki_token_budget: usize,
    pub prompt_char_budget: usize,
    pub title_guard: bool,
}

impl Default for HopSettings {
    fn default() -> Self {
        Self {
            answer_model: "gpt-4o".into(),
            temperature: 0.0,
            search_limit: 10,
            wiki_articles: 1,
            wiki_token_budget: WIKI_TOKEN_BUDGET,
            prompt_char_budget: DEFAULT_PROMPT_CHAR_BUDGET,
            title_guard: true,
        }
    }
}

/// Retrieval for one hop. Retrieval failures degrade to less context
/// instead of failing the hop.
pub fn retrieve_context(
    backends: HopBackends<'_>,
    settings: &HopSettings,
    query: &str,
) -> ContextBundle {
    let results = match search(backends.search, query, settings.search_limit) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!("search for {query:?} failed: {e}");
            Vec::new()
        }
    };
    let pages = fetch_wikipedia(backends.wiki, &results, query, settings.wiki_articles);
    let sentences: Vec<String> = pages.iter().flat_map(|p| split_sentences(p)).collect();
    let ranked = rank_sentences_tfidf(&sentences, query);
    let selected = select_top_sentences(&ranked, settings.wiki_token_budget);
    let snippets: Vec<String> = results.into_iter().map(|r| r.snippet).collect();
    assemble_context_with_budget(&snippets, &selected, settings.wiki_token_budget)
}

/// Runs one reasoning hop: retrieve, answer, normalize.
pub fn run_hop(
    backends: HopBackends<'_>,
    settings: &HopSettings,
    answer_template: &PromptTemplate,
    step: &DecompositionStep,
    anchor_in: &str,
) -> Result<HopRecord, HopError> {
    let wrap = |source: GenerateError| HopError {
        index: step.index,
        source,
    };
    let query = build_search_query(&step.sub_query, anchor_in);
    let context = retrieve_context(backends, settings, &query);
    let request = AnswerRequest {
        sub_question: step.sub_question.clone(),
        sub_query: step.sub_query.clone(),
        anchor: anchor_in.to_string(),
        context,
    };
    let prompt = render_answer_prompt(&request, answer_template, settings.prompt_char_budget)
        .map_err(wrap)?;
    let raw = generate_answer(
        backends.answerer,
        &settings.answer_model,
        settings.temperature,
        &prompt,
    )
    .map_err(wrap)?;
    let kind = infer_answer_kind(&step.sub_question);
    let normalized = match normalize(backends.wiki, &raw.short, kind, settings.title_guard) {
        Ok(s) => s,
        Err(NormalizeError::UnverifiableAnswer(s)) => {
            tracing::debug!("short answer {s:?} is not yes/no; normalizing without a kind");
            normalize(
                backends.wiki,
                &raw.short,
                AnswerKind::Unknown,
                settings.title_guard,
            )
            .unwrap_or_else(|_| raw.short.clone())
        }
    };
    Ok(HopRecord {
        index: step.index,
        sub_question: request.sub_question,
        sub_query: request.sub_query,
        anchor_in: request.anchor,
        context: request.context,
        raw_answer: raw,
        normalized_short: normalized,
    })
}
