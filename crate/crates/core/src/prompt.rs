//! Prompt templates with `{name}` placeholders and lenient JSON extraction
//! from model replies.
//!
//! A template file has a `[system]` section and a `[user]` section. Only
//! `{ident}` (ASCII letters, digits, underscore) is a placeholder; any other
//! brace is literal, so JSON examples can sit in a template unescaped.
//! Substitution is a single pass: bound values are never re-scanned.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("template `{template}` needs a value for `{name}`")]
    MissingPlaceholder { template: String, name: String },
    #[error("template `{0}` is malformed: {1}")]
    Malformed(String, String),
    #[error("cannot read template {0}: {1}")]
    Io(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub system_text: String,
    pub user_text: String,
    pub required_placeholders: BTreeSet<String>,
}

/// A rendered prompt ready to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub name: String,
    pub system_text: String,
    pub user_text: String,
}

impl Prompt {
    pub fn char_len(&self) -> usize {
        self.system_text.chars().count() + self.user_text.chars().count()
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Placeholder names in `text`, in order of first appearance.
pub fn placeholders(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_ident(&after[..close]) => {
                let name = &after[..close];
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

fn substitute(text: &str, bindings: &BTreeMap<&str, &str>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_ident(&after[..close]) => match bindings.get(&after[..close]) {
                Some(v) => {
                    out.push_str(v);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            },
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

impl PromptTemplate {
    pub fn new(name: &str, system_text: &str, user_text: &str) -> Self {
        let required = placeholders(system_text)
            .into_iter()
            .chain(placeholders(user_text))
            .collect();
        Self {
            name: name.to_string(),
            system_text: system_text.to_string(),
            user_text: user_text.to_string(),
            required_placeholders: required,
        }
    }

    /// Parses the `[system]` / `[user]` file format.
    pub fn parse(name: &str, source: &str) -> Result<Self, PromptError> {
        let malformed = |m: &str| PromptError::Malformed(name.to_string(), m.to_string());
        let source = source.replace("\r\n", "\n");
        let body = source
            .trim_start()
            .strip_prefix("[system]\n")
            .ok_or_else(|| malformed("must start with a [system] line"))?;
        let (system, user) = body
            .split_once("\n[user]\n")
            .ok_or_else(|| malformed("missing [user] line"))?;
        Ok(Self::new(name, system.trim_end(), user.trim_end()))
    }

    pub fn load(name: &str, path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::Io(path.display().to_string(), e.to_string()))?;
        Self::parse(name, &text)
    }

    /// Fills every placeholder. Extra bindings are ignored.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<Prompt, PromptError> {
        let map: BTreeMap<&str, &str> = bindings.iter().copied().collect();
        if let Some(missing) = self
            .required_placeholders
            .iter()
            .find(|p| !map.contains_key(p.as_str()))
        {
            return Err(PromptError::MissingPlaceholder {
                template: self.name.clone(),
                name: missing.clone(),
            });
        }
        Ok(Prompt {
            name: self.name.clone(),
            system_text: substitute(&self.system_text, &map),
            user_text: substitute(&self.user_text, &map),
        })
    }
}

/// One worked example shown to the decomposition model.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DecompositionExample {
    pub question: String,
    pub steps: Vec<serde_json::Value>,
}

/// Every template the pipeline uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompts {
    pub simplify: PromptTemplate,
    pub simplify_strict: PromptTemplate,
    pub decompose: PromptTemplate,
    pub extract_direct: PromptTemplate,
    pub answer: PromptTemplate,
    pub examples: Vec<DecompositionExample>,
}

const DEFAULTS: &[(&str, &str)] = &[
    ("simplify", include_str!("../templates/simplify.txt")),
    (
        "simplify_strict",
        include_str!("../templates/simplify_strict.txt"),
    ),
    ("decompose", include_str!("../templates/decompose.txt")),
    (
        "extract_direct",
        include_str!("../templates/extract_direct.txt"),
    ),
    ("answer", include_str!("../templates/answer.txt")),
];
const DEFAULT_EXAMPLES: &str = include_str!("../templates/decompose_examples.json");

impl Default for Prompts {
    fn default() -> Self {
        Self::load(None).expect("built-in templates are valid")
    }
}

impl Prompts {
    /// Built-in templates, each replaced by `<dir>/<name>.txt` (and the
    /// examples by `<dir>/decompose_examples.json`) when such a file exists.
    pub fn load(dir: Option<&Path>) -> Result<Self, PromptError> {
        let mut loaded = BTreeMap::new();
        for (name, builtin) in DEFAULTS {
            let file = dir
                .map(|d| d.join(format!("{name}.txt")))
                .filter(|p| p.is_file());
            let t = match file {
                Some(p) => PromptTemplate::load(name, &p)?,
                None => PromptTemplate::parse(name, builtin)?,
            };
            loaded.insert(*name, t);
        }
        let examples_text = match dir
            .map(|d| d.join("decompose_examples.json"))
            .filter(|p| p.is_file())
        {
            Some(p) => std::fs::read_to_string(&p)
                .map_err(|e| PromptError::Io(p.display().to_string(), e.to_string()))?,
            None => DEFAULT_EXAMPLES.to_string(),
        };
        let examples: Vec<DecompositionExample> = serde_json::from_str(&examples_text)
            .map_err(|e| PromptError::Malformed("decompose_examples".into(), e.to_string()))?;
        let mut take = |n: &str| loaded.remove(n).expect("every default is loaded");
        Ok(Self {
            simplify: take("simplify"),
            simplify_strict: take("simplify_strict"),
            decompose: take("decompose"),
            extract_direct: take("extract_direct"),
            answer: take("answer"),
            examples,
        })
    }

    /// The worked examples as they appear inside the decomposition prompt.
    pub fn render_examples(&self) -> String {
        self.examples
            .iter()
            .map(|ex| {
                let steps = serde_json::to_string(&ex.steps).expect("values serialize");
                format!("Question: {}\nSteps: {steps}", ex.question)
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Text of the first fenced code block in `text`, without the fence line's
/// language tag.
fn fenced_block(text: &str) -> Option<&str> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(&body[..end])
}

/// Parses a model reply as JSON. The whole reply is tried first, then the
/// first fenced code block.
pub fn extract_json(text: &str) -> Option<serde_json::Value> {
    if let Ok(v) = serde_json::from_str(text.trim()) {
        return Some(v);
    }
    fenced_block(text).and_then(|b| serde_json::from_str(b.trim()).ok())
}

/// Appended to the user message when a reply could not be parsed.
pub fn correction_note(expected: &str, problem: &str) -> String {
    format!("\n\nYour previous reply was rejected ({problem}). Reply again with {expected} only.")
}
