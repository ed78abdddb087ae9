//! Scoring: exact match and a synonym-table approximation of the
//! concept-level score, aggregated into a run report.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::text::{collapse_whitespace, nfc};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("malformed concept table: {0}")]
    MalformedTable(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn is_edge_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ','
            | ';'
            | ':'
            | '!'
            | '?'
            | '"'
            | '\''
            | '`'
            | '('
            | ')'
            | '['
            | ']'
            | '{'
            | '}'
            | '\u{201C}'
            | '\u{201D}'
            | '\u{2018}'
            | '\u{2019}'
            | '\u{00AB}'
            | '\u{00BB}'
    ) || c.is_whitespace()
}

/// Canonical form used by every comparison: NFC, lowercase, surrounding
/// quotes and punctuation removed, whitespace collapsed.
pub fn canonical(s: &str) -> String {
    let lowered = nfc(s).to_lowercase();
    collapse_whitespace(lowered.trim_matches(is_edge_punct))
}

pub fn exact_match(pred: &str, gold: &str) -> u8 {
    u8::from(canonical(pred) == canonical(gold))
}

#[derive(Debug, Deserialize)]
struct ConceptLine {
    concept_id: String,
    surface_forms: Vec<String>,
}

/// Maps canonical surface forms to concept ids.
#[derive(Debug, Clone, Default)]
pub struct ConceptTable {
    forms: HashMap<String, BTreeSet<String>>,
}

impl ConceptTable {
    /// Parses JSON-Lines of `{"concept_id": ..., "surface_forms": [...]}`.
    pub fn from_jsonl(text: &str) -> Result<Self, EvalError> {
        let mut forms: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ConceptLine = serde_json::from_str(line)
                .map_err(|e| EvalError::MalformedTable(format!("line {}: {e}", n + 1)))?;
            if parsed.concept_id.trim().is_empty() {
                return Err(EvalError::MalformedTable(format!(
                    "line {}: empty concept_id",
                    n + 1
                )));
            }
            for form in &parsed.surface_forms {
                let c = canonical(form);
                if c.is_empty() {
                    return Err(EvalError::MalformedTable(format!(
                        "line {}: empty surface form",
                        n + 1
                    )));
                }
                forms
                    .entry(c)
                    .or_default()
                    .insert(format!("concept:{}", parsed.concept_id));
            }
        }
        Ok(Self { forms })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::from_jsonl(&read(path)?)
    }

    /// Concept ids of a canonical surface form; unmapped forms are their
    /// own singleton concept.
    pub fn concepts(&self, canonical_form: &str) -> BTreeSet<String> {
        self.forms
            .get(canonical_form)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([format!("surface:{canonical_form}")]))
    }
}

/// 1 when the answers match exactly or denote a shared concept.
pub fn concept_score(pred: &str, gold: &str, table: &ConceptTable) -> u8 {
    if exact_match(pred, gold) == 1 {
        return 1;
    }
    let p = table.concepts(&canonical(pred));
    let g = table.concepts(&canonical(gold));
    u8::from(!p.is_disjoint(&g))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub id: String,
    #[serde(default)]
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub id: String,
    pub em: u8,
    pub cl: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub exact_match: f64,
    pub concept_level: f64,
    /// Sorted by id.
    pub per_question: Vec<QuestionScore>,
    /// Gold ids with no prediction (scored 0).
    pub missing: usize,
    /// True when concept-level scores come from a synonym table stand-in
    /// (or from exact match alone when no table was given).
    pub concept_level_approximate: bool,
}

impl EvalReport {
    /// Aggregates per-question scores; means are exact integer sums over `n`.
    pub fn from_scores(mut per_question: Vec<QuestionScore>, missing: usize) -> Self {
        per_question.sort_by(|a, b| a.id.cmp(&b.id));
        let n = per_question.len();
        let em: usize = per_question.iter().map(|q| q.em as usize).sum();
        let cl: usize = per_question.iter().map(|q| q.cl as usize).sum();
        let mean = |s: usize| if n == 0 { 0.0 } else { s as f64 / n as f64 };
        Self {
            n,
            exact_match: mean(em),
            concept_level: mean(cl),
            per_question,
            missing,
            concept_level_approximate: true,
        }
    }

    /// One-row results table.
    pub fn to_table(&self, run: &str, id: &str) -> String {
        render_table(&[(run, id, self)])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Renders rows as `Run | ID | Exact Match Score | Concept Level Score`
/// with three decimals.
pub fn render_table(rows: &[(&str, &str, &EvalReport)]) -> String {
    let headers = ["Run", "ID", "Exact Match Score", "Concept Level Score"];
    let cells: Vec<[String; 4]> = rows
        .iter()
        .map(|(run, id, r)| {
            [
                run.to_string(),
                id.to_string(),
                format!("{:.3}", r.exact_match),
                format!("{:.3}", r.concept_level),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..4)
        .map(|c| {
            cells
                .iter()
                .map(|row| row[c].chars().count())
                .chain(std::iter::once(headers[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |vals: [&str; 4]| {
        let parts: Vec<String> = vals
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!(" {v:^w$} "))
            .collect();
        format!("|{}|", parts.join("|"))
    };
    let mut out = String::new();
    out.push_str(&line(headers));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(w + 2)).collect();
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for row in &cells {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
        out.push('\n');
    }
    if rows.iter().any(|(_, _, r)| r.concept_level_approximate) {
        out.push_str("(Concept Level Score approximated with a synonym table)\n");
    }
    out
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldRecord>, EvalError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (n, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let g: GoldRecord = serde_json::from_str(line)
            .map_err(|e| EvalError::MalformedInput(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if !seen.insert(g.id.clone()) {
            return Err(EvalError::MalformedInput(format!(
                "{}: duplicate gold id {}",
                path.display(),
                g.id
            )));
        }
        out.push(g);
    }
    Ok(out)
}

/// Reads predictions keyed by id. Accepts `{id, short_answer, long_answer}`
/// records and pipeline trace records (`question_id` / `final_short`);
/// the last record for an id wins.
pub fn read_predictions(path: &Path) -> Result<HashMap<String, String>, EvalError> {
    let mut out = HashMap::new();
    for (n, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad =
            |msg: String| EvalError::MalformedInput(format!("{}:{}: {msg}", path.display(), n + 1));
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let (id, answer) = if let Some(id) = v.get("id") {
            (id, v.get("short_answer"))
        } else if let Some(id) = v.get("question_id") {
            (id, v.get("final_short"))
        } else {
            return Err(bad("record has neither `id` nor `question_id`".into()));
        };
        let id = id
            .as_str()
            .ok_or_else(|| bad("id is not a string".into()))?;
        let answer = answer
            .and_then(|a| a.as_str())
            .ok_or_else(|| bad("missing short answer".into()))?;
        out.insert(id.to_string(), answer.to_string());
    }
    Ok(out)
}

/// Scores predictions against gold answers.
pub fn score_run(
    preds: &HashMap<String, String>,
    golds: &[GoldRecord],
    table: Option<&ConceptTable>,
) -> EvalReport {
    let empty = ConceptTable::default();
    let table = table.unwrap_or(&empty);
    let scored: Vec<(QuestionScore, bool)> = par::map(golds, |g| match preds.get(&g.id) {
        Some(p) => (
            QuestionScore {
                id: g.id.clone(),
                em: exact_match(p, &g.answer),
                cl: concept_score(p, &g.answer, table),
            },
            false,
        ),
        None => (
            QuestionScore {
                id: g.id.clone(),
                em: 0,
                cl: 0,
            },
            true,
        ),
    });
    let missing = scored.iter().filter(|(_, m)| *m).count();
    if missing > 0 {
        tracing::warn!("{missing} gold questions have no prediction; scored 0");
    }
    EvalReport::from_scores(scored.into_iter().map(|(s, _)| s).collect(), missing)
}

pub fn evaluate_run(
    preds: &Path,
    golds: &Path,
    table: Option<&ConceptTable>,
) -> Result<EvalReport, EvalError> {
    let p = read_predictions(preds)?;
    let g = read_gold(golds)?;
    Ok(score_run(&p, &g, table))
}
