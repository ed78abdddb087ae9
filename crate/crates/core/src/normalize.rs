//! Short-answer verification and Wikipedia-title normalization.
//!
//! The format rules here are the same ones the answer prompt asks the model
//! to follow: `Yes`/`No` for polar questions, a bare noun phrase for entity
//! questions, a number plus unit for numeric ones.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::WikiClient;
use crate::text::{collapse_whitespace, nfc, terms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    YesNo,
    Entity,
    Numeric,
    Unknown,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("cannot verify yes/no answer {0:?}")]
    UnverifiableAnswer(String),
}

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "am", "does", "do", "did", "can", "could", "has", "have", "had",
    "will", "would", "should", "shall", "may", "might", "must",
];

const WH_WORDS: &[&str] = &[
    "what", "which", "who", "whom", "whose", "where", "when", "why", "how",
];

/// Expected answer shape for a (sub-)question.
pub fn infer_answer_kind(question: &str) -> AnswerKind {
    let t = terms(question);
    match t.first().map(String::as_str) {
        Some(first) if AUXILIARIES.contains(&first) => AnswerKind::YesNo,
        Some("how") if matches!(t.get(1).map(String::as_str), Some("many" | "much")) => {
            AnswerKind::Numeric
        }
        Some(first) if WH_WORDS.contains(&first) => AnswerKind::Entity,
        _ => AnswerKind::Unknown,
    }
}

fn is_quote(c: char) -> bool {
    matches!(
        c,
        '"' | '\''
            | '`'
            | '\u{201C}'
            | '\u{201D}'
            | '\u{2018}'
            | '\u{2019}'
            | '\u{00AB}'
            | '\u{00BB}'
    )
}

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '\u{3002}')
}

fn strip_article(s: &str) -> &str {
    for article in ["a ", "an ", "the "] {
        if s.len() > article.len()
            && s.is_char_boundary(article.len())
            && s[..article.len()].eq_ignore_ascii_case(article)
        {
            return s[article.len()..].trim_start();
        }
    }
    s
}

fn format_pass(s: &str, kind: AnswerKind) -> String {
    let s = collapse_whitespace(&nfc(s));
    let s = s.trim_start_matches(is_quote).trim_end_matches(is_quote);
    let s = s.trim_end_matches(|c: char| is_trailing_punct(c) || is_quote(c) || c.is_whitespace());
    let s = s.trim_start_matches(|c: char| is_quote(c) || c.is_whitespace());
    let s = if kind == AnswerKind::Entity {
        strip_article(s)
    } else {
        s
    };
    s.trim().to_string()
}

/// Applies the short-answer format rules.
///
/// Trims, strips surrounding quotes and trailing sentence punctuation,
/// collapses whitespace; `YesNo` answers become exactly `Yes` or `No` from
/// their leading token; `Entity` answers lose a leading article. Rules are
/// applied until nothing changes, so the function is idempotent.
pub fn apply_format_rules(short: &str, kind: AnswerKind) -> Result<String, NormalizeError> {
    if kind == AnswerKind::YesNo {
        return match terms(short).first().map(String::as_str) {
            Some("yes") => Ok("Yes".into()),
            Some("no") => Ok("No".into()),
            _ => Err(NormalizeError::UnverifiableAnswer(short.to_string())),
        };
    }
    let mut current = short.to_string();
    loop {
        let next = format_pass(&current, kind);
        if next == current {
            return Ok(next);
        }
        current = next;
    }
}

const GUARD_STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "and", "or", "by", "with", "from", "as",
    "is", "are",
];

fn content_terms(s: &str) -> Vec<String> {
    terms(&nfc(s))
        .into_iter()
        .filter(|t| !GUARD_STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// True when `answer` and `title` share at least one content token
/// (case-insensitive).
pub fn shares_content_token(answer: &str, title: &str) -> bool {
    let a = content_terms(answer);
    content_terms(title).iter().any(|t| a.contains(t))
}

/// Replaces `short` with the title of its top Wikipedia search hit.
///
/// With `guard` on, the title is adopted only when it shares a content
/// token with `short`. Any client failure leaves `short` unchanged.
pub fn wikipedia_normalize(client: &dyn WikiClient, short: &str, guard: bool) -> String {
    if short.trim().is_empty() {
        return short.to_string();
    }
    let top = match client.search_titles(short, 1) {
        Ok(titles) => titles.into_iter().next(),
        Err(e) => {
            tracing::warn!("title normalization lookup for {short:?} failed: {e}");
            None
        }
    };
    match top {
        Some(title)
            if !title.trim().is_empty() && (!guard || shares_content_token(short, &title)) =>
        {
            title
        }
        _ => short.to_string(),
    }
}

/// Full normalization chain: format rules, a title lookup for entity-like
/// answers, then the format rules again.
pub fn normalize(
    client: &dyn WikiClient,
    short: &str,
    kind: AnswerKind,
    guard: bool,
) -> Result<String, NormalizeError> {
    let formatted = apply_format_rules(short, kind)?;
    match kind {
        AnswerKind::YesNo | AnswerKind::Numeric => Ok(formatted),
        AnswerKind::Entity | AnswerKind::Unknown => {
            let titled = wikipedia_normalize(client, &formatted, guard);
            apply_format_rules(&titled, kind)
        }
    }
}
