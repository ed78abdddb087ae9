//! Question simplification, decomposition into sub-question chains and
//! query/anchor extraction for direct questions.

use serde_json::Value;
use thiserror::Error;

use crate::backends::{BackendError, LanguageModel, LlmRequest};
use crate::model::{DecompositionPlan, DecompositionStep, Question, SIMPLIFIED_TOKEN_LIMIT};
use crate::prompt::{correction_note, extract_json, Prompt, PromptError, Prompts};
use crate::text::{collapse_whitespace, longest_capitalized_span, split_sentences, token_count};

pub const DEFAULT_MAX_HOPS: usize = 4;
/// Shortest sub-question accepted in a plan, in tokens.
pub const MIN_SUB_QUESTION_TOKENS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Index of the last sentence ending in `?`, or of the last sentence when
/// none does.
fn final_question_index(sentences: &[String]) -> usize {
    sentences
        .iter()
        .rposition(|s| {
            s.trim_end_matches(['"', '\'', ')', '\u{201D}'])
                .ends_with('?')
        })
        .unwrap_or(sentences.len().saturating_sub(1))
}

/// True when some sentence precedes the final interrogative sentence, or
/// the question is longer than [`SIMPLIFIED_TOKEN_LIMIT`] tokens.
pub fn needs_simplification(question: &Question) -> bool {
    let sentences = split_sentences(&question.text);
    final_question_index(&sentences) > 0 || token_count(&question.text) > SIMPLIFIED_TOKEN_LIMIT
}

/// Last-resort simplification: the final interrogative sentence, cut to
/// its last `SIMPLIFIED_TOKEN_LIMIT - 1` tokens if still too long.
pub fn truncate_to_final_question(text: &str) -> String {
    let sentences = split_sentences(text);
    let last = sentences
        .get(final_question_index(&sentences))
        .cloned()
        .unwrap_or_else(|| text.trim().to_string());
    let tokens: Vec<&str> = last.split_whitespace().collect();
    let keep = SIMPLIFIED_TOKEN_LIMIT - 1;
    if tokens.len() > keep {
        tokens[tokens.len() - keep..].join(" ")
    } else {
        tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplified {
    pub text: String,
    /// Set when both model attempts were too long and the text was cut
    /// mechanically.
    pub truncated: bool,
}

/// Checks the plan invariants and returns the plan unchanged when they
/// hold. The error names the first rule broken.
pub fn validate_plan(
    plan: DecompositionPlan,
    max_hops: usize,
) -> Result<DecompositionPlan, DecomposeError> {
    let bad = |m: String| Err(DecomposeError::MalformedPlan(m));
    if plan.steps.is_empty() {
        return bad("empty steps".into());
    }
    if plan.steps.len() > max_hops {
        return bad(format!(
            "too many steps ({} > {max_hops})",
            plan.steps.len()
        ));
    }
    if plan.steps.iter().enumerate().any(|(i, s)| s.index != i + 1) {
        return bad("non-contiguous indices".into());
    }
    for s in &plan.steps {
        let q = token_count(&s.sub_question);
        let k = token_count(&s.sub_query);
        if q == 0 {
            return bad(format!("step {}: empty sub_question", s.index));
        }
        if k == 0 {
            return bad(format!("step {}: empty sub_query", s.index));
        }
        if q < MIN_SUB_QUESTION_TOKENS {
            return bad(format!(
                "step {}: sub_question has fewer than {MIN_SUB_QUESTION_TOKENS} tokens",
                s.index
            ));
        }
        if k > q {
            return bad(format!(
                "step {}: sub_query is longer than sub_question",
                s.index
            ));
        }
    }
    Ok(plan)
}

fn string_field(
    obj: &serde_json::Map<String, Value>,
    field: &str,
    step: usize,
) -> Result<String, String> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(collapse_whitespace(s)),
        Some(_) => Err(format!("step {step}: field \"{field}\" is not a string")),
        None => Err(format!("step {step}: missing field \"{field}\"")),
    }
}

fn anchor_value(v: Option<&Value>) -> Option<String> {
    let s = match v? {
        Value::String(s) => collapse_whitespace(s),
        Value::Array(items) => items
            .iter()
            .filter_map(Value::as_str)
            .map(collapse_whitespace)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(", "),
        _ => return None,
    };
    (!s.is_empty()).then_some(s)
}

fn fallback_anchor(question_text: &str) -> String {
    longest_capitalized_span(question_text).unwrap_or_default()
}

/// Turns a decomposition reply into a validated plan.
pub fn parse_plan(
    reply: &str,
    question_id: &str,
    question_text: &str,
    max_hops: usize,
) -> Result<DecompositionPlan, DecomposeError> {
    let malformed = DecomposeError::MalformedPlan;
    let value = extract_json(reply).ok_or_else(|| malformed("reply is not JSON".into()))?;
    let items = match value {
        Value::Array(items) => items,
        Value::Object(mut o) => match o.remove("steps") {
            Some(Value::Array(items)) => items,
            _ => return Err(malformed("expected a JSON array of steps".into())),
        },
        _ => return Err(malformed("expected a JSON array of steps".into())),
    };
    let mut steps = Vec::with_capacity(items.len());
    let mut anchor = None;
    for (i, item) in items.iter().enumerate() {
        let pos = i + 1;
        let obj = item
            .as_object()
            .ok_or_else(|| malformed(format!("step {pos}: not an object")))?;
        let index = match obj.get("index") {
            None => pos,
            Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| {
                malformed(format!("step {pos}: field \"index\" is not an integer"))
            })?,
        };
        let sub_question = string_field(obj, "sub_question", pos).map_err(malformed)?;
        let sub_query = string_field(obj, "sub_query", pos).map_err(malformed)?;
        if i == 0 {
            anchor = anchor_value(obj.get("anchor"));
        }
        steps.push(DecompositionStep {
            index,
            sub_question,
            sub_query,
        });
    }
    let plan = DecompositionPlan {
        question_id: question_id.to_string(),
        steps,
        initial_anchor: anchor.unwrap_or_else(|| fallback_anchor(question_text)),
    };
    validate_plan(plan, max_hops)
}

/// Turns a direct-extraction reply into a one-step plan.
pub fn parse_direct(
    reply: &str,
    question_id: &str,
    question_text: &str,
) -> Result<DecompositionPlan, DecomposeError> {
    let malformed = DecomposeError::MalformedPlan;
    let value = extract_json(reply).ok_or_else(|| malformed("reply is not JSON".into()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("expected a JSON object".into()))?;
    let sub_query = string_field(obj, "sub_query", 1).map_err(malformed)?;
    let anchor = anchor_value(obj.get("anchor")).unwrap_or_else(|| fallback_anchor(question_text));
    let plan = DecompositionPlan {
        question_id: question_id.to_string(),
        steps: vec![DecompositionStep {
            index: 1,
            sub_question: collapse_whitespace(question_text),
            sub_query,
        }],
        initial_anchor: anchor,
    };
    validate_plan(plan, 1)
}

/// LLM-backed decomposition operations sharing one backend and template set.
pub struct Decomposer<'a> {
    pub llm: &'a dyn LanguageModel,
    pub prompts: &'a Prompts,
    pub model_id: String,
    pub temperature: f64,
    pub max_hops: usize,
}

impl Decomposer<'_> {
    fn request(&self, prompt: &Prompt, extra_user: &str, hint: Option<&str>) -> LlmRequest {
        LlmRequest {
            model_id: self.model_id.clone(),
            system_text: prompt.system_text.clone(),
            user_text: format!("{}{extra_user}", prompt.user_text),
            temperature: self.temperature,
            response_hint: hint.map(str::to_string),
            label: prompt.name.clone(),
        }
    }

    /// Calls the model, parses with `parse`, and re-prompts once with a
    /// correction note when parsing fails.
    fn call_parsed<T>(
        &self,
        prompt: &Prompt,
        expected: &str,
        parse: impl Fn(&str) -> Result<T, DecomposeError>,
    ) -> Result<T, DecomposeError> {
        let first = self.llm.complete(&self.request(prompt, "", Some("json")))?;
        match parse(&first) {
            Ok(v) => Ok(v),
            Err(DecomposeError::MalformedPlan(problem)) => {
                tracing::debug!("{} reply rejected ({problem}); re-prompting", prompt.name);
                let note = correction_note(expected, &problem);
                let second = self
                    .llm
                    .complete(&self.request(prompt, &note, Some("json")))?;
                parse(&second)
            }
            Err(e) => Err(e),
        }
    }

    /// Rewrites the question to fewer than [`SIMPLIFIED_TOKEN_LIMIT`] tokens.
    pub fn simplify(&self, question: &Question) -> Result<Simplified, DecomposeError> {
        let max_words = SIMPLIFIED_TOKEN_LIMIT.to_string();
        let bindings = [
            ("question", question.text.as_str()),
            ("max_words", max_words.as_str()),
        ];
        for template in [&self.prompts.simplify, &self.prompts.simplify_strict] {
            let prompt = template.render(&bindings)?;
            let reply = self.llm.complete(&self.request(&prompt, "", None))?;
            let text =
                collapse_whitespace(reply.trim().trim_matches(|c: char| matches!(c, '"' | '`')));
            let n = token_count(&text);
            if n > 0 && n < SIMPLIFIED_TOKEN_LIMIT {
                return Ok(Simplified {
                    text,
                    truncated: false,
                });
            }
            tracing::debug!(
                "simplification attempt with {} gave {n} tokens",
                template.name
            );
        }
        tracing::warn!(
            "question {} truncated after two long simplifications",
            question.id
        );
        Ok(Simplified {
            text: truncate_to_final_question(&question.text),
            truncated: true,
        })
    }

    pub fn decompose_sequential(
        &self,
        question: &Question,
    ) -> Result<DecompositionPlan, DecomposeError> {
        let text = question.effective_text();
        let examples = self.prompts.render_examples();
        let prompt = self
            .prompts
            .decompose
            .render(&[("question", text), ("examples", examples.as_str())])?;
        self.call_parsed(&prompt, "a JSON array of step objects", |reply| {
            parse_plan(reply, &question.id, text, self.max_hops)
        })
    }

    pub fn extract_direct(&self, question: &Question) -> Result<DecompositionPlan, DecomposeError> {
        let text = question.effective_text();
        let prompt = self.prompts.extract_direct.render(&[("question", text)])?;
        self.call_parsed(
            &prompt,
            "a JSON object with sub_query and anchor",
            |reply| parse_direct(reply, &question.id, text),
        )
    }
}
