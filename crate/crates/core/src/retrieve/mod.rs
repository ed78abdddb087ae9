//! Per-hop context construction: search snippets plus TF-IDF-ranked
//! Wikipedia sentences under a token budget.

mod tfidf;

pub use tfidf::{rank_sentences_tfidf, RankedSentence};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, SearchEngine, WikiClient};
use crate::model::{ContextBundle, MAX_SNIPPETS, WIKI_TOKEN_BUDGET};
use crate::text::{collapse_whitespace, token_count};

pub use crate::text::split_sentences;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub title: String,
    pub link: String,
    #[serde(default)]
    pub snippet: String,
}

impl SearchResult {
    fn has_valid_link(&self) -> bool {
        url::Url::parse(&self.link).is_ok_and(|u| u.has_host())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RetrieveError {
    #[error("invalid search request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Search input for a hop: the sub-query followed by the anchor.
pub fn build_search_query(sub_query: &str, anchor: &str) -> String {
    let q = collapse_whitespace(sub_query);
    let a = collapse_whitespace(anchor);
    if a.is_empty() {
        q
    } else {
        format!("{q} {a}").trim().to_string()
    }
}

/// Queries the search backend, returning at most `limit` results in
/// provider order. Results with an unusable link are dropped.
pub fn search(
    backend: &dyn SearchEngine,
    query: &str,
    limit: usize,
) -> Result<Vec<SearchResult>, RetrieveError> {
    if query.trim().is_empty() {
        return Err(RetrieveError::InvalidRequest("empty query".into()));
    }
    if !(1..=MAX_SNIPPETS).contains(&limit) {
        return Err(RetrieveError::InvalidRequest(format!(
            "limit {limit} outside 1..={MAX_SNIPPETS}"
        )));
    }
    let mut results = backend.search(query, limit)?;
    results.retain(|r| {
        let ok = r.has_valid_link();
        if !ok {
            tracing::debug!("dropping search result with invalid link {:?}", r.link);
        }
        ok
    });
    results.truncate(limit);
    Ok(results)
}

const SKIPPED_NAMESPACES: &[&str] = &[
    "special:",
    "file:",
    "category:",
    "talk:",
    "wikipedia:",
    "help:",
    "portal:",
    "template:",
    "user:",
];

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Some(b) = s
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
            {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Article title for an `*.wikipedia.org/wiki/<Title>` link.
pub fn wikipedia_title(link: &str) -> Option<String> {
    let u = url::Url::parse(link).ok()?;
    let host = u.host_str()?;
    if !(host == "wikipedia.org" || host.ends_with(".wikipedia.org")) {
        return None;
    }
    let raw = u.path().strip_prefix("/wiki/")?;
    let title = percent_decode(raw).replace('_', " ");
    let title = title.trim();
    if title.is_empty() {
        return None;
    }
    let lower = title.to_lowercase();
    if SKIPPED_NAMESPACES.iter().any(|ns| lower.starts_with(ns)) {
        return None;
    }
    Some(title.to_string())
}

/// Plain text of up to `max_articles` Wikipedia articles for a hop.
///
/// Wikipedia links among `results` are used first. When there are none the
/// Wikipedia search endpoint is queried with `query` and its top page is
/// fetched. Failed fetches are logged and skipped.
pub fn fetch_wikipedia(
    client: &dyn WikiClient,
    results: &[SearchResult],
    query: &str,
    max_articles: usize,
) -> Vec<String> {
    let mut titles: Vec<String> = Vec::new();
    for r in results {
        if let Some(t) = wikipedia_title(&r.link) {
            if !titles.contains(&t) {
                titles.push(t);
            }
        }
    }
    if titles.is_empty() && !query.trim().is_empty() {
        match client.search_titles(query, 1) {
            Ok(found) => titles.extend(found.into_iter().take(1)),
            Err(e) => tracing::warn!("wikipedia search for {query:?} failed: {e}"),
        }
    }
    let mut texts = Vec::new();
    for title in titles.into_iter().take(max_articles) {
        match client.page_text(&title) {
            Ok(Some(text)) if !text.trim().is_empty() => texts.push(text),
            Ok(_) => tracing::debug!("wikipedia page {title:?} missing or empty"),
            Err(e) => tracing::warn!("wikipedia fetch of {title:?} failed: {e}"),
        }
    }
    texts
}

/// Greedy selection in rank order: sentences are taken while they fit in
/// `token_budget`; the first one that would overflow ends the selection.
pub fn select_top_sentences(ranked: &[RankedSentence], token_budget: usize) -> Vec<String> {
    let mut used = 0;
    let mut out = Vec::new();
    for r in ranked {
        let n = token_count(&r.sentence);
        if used + n > token_budget {
            break;
        }
        used += n;
        out.push(r.sentence.clone());
    }
    out
}

/// Builds a hop's context bundle.
///
/// Empty snippets are dropped and at most [`MAX_SNIPPETS`] are kept. Wiki
/// sentences that duplicate a snippet are removed, then the wiki list is cut
/// to the default token budget with the same greedy rule as
/// [`select_top_sentences`].
pub fn assemble_context(snippets: &[String], wiki_sentences: &[String]) -> ContextBundle {
    assemble_context_with_budget(snippets, wiki_sentences, WIKI_TOKEN_BUDGET)
}

pub fn assemble_context_with_budget(
    snippets: &[String],
    wiki_sentences: &[String],
    token_budget: usize,
) -> ContextBundle {
    let snippets: Vec<String> = snippets
        .iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .take(MAX_SNIPPETS)
        .collect();
    let budget = token_budget.min(WIKI_TOKEN_BUDGET);
    let mut used = 0;
    let mut kept = Vec::new();
    for s in wiki_sentences {
        let s = s.trim();
        if s.is_empty() || snippets.iter().any(|sn| sn == s) {
            continue;
        }
        let n = token_count(s);
        if used + n > budget {
            break;
        }
        used += n;
        kept.push(s.to_string());
    }
    ContextBundle {
        snippets,
        wiki_sentences: kept,
        wiki_token_count: used,
    }
}
