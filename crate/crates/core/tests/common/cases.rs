//! Tables and stubs shared by the normalization and evaluation checks.

use std::path::PathBuf;
use std::sync::Arc;

use hopqa_core::backends::{BackendError, Dispatcher, Transcript, WikiClient};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `(answer, recorded top titles, expected result with the guard on)`.
pub const TITLE_GUARD_CASES: &[(&str, &[&str], &str)] = &[
    ("HFE", &["HFE gene"], "HFE gene"),
    ("FBN1", &["Fibrillin"], "FBN1"),
    ("Xq28 microdeletion", &[], "Xq28 microdeletion"),
];

pub fn title_guard_transcript() -> PathBuf {
    super::fixtures_dir().join("normalize/wiki_titles.jsonl")
}

pub fn title_guard_wiki() -> Dispatcher {
    let t = Transcript::open(title_guard_transcript()).expect("title fixtures load");
    Dispatcher::replay(Arc::new(t))
}

/// `(raw short answer, expected canonical form)`; `None` marks answers the
/// yes/no rule must reject.
pub const YES_NO_TABLE: &[(&str, Option<&str>)] = &[
    ("yes", Some("Yes")),
    ("Yes", Some("Yes")),
    ("YES", Some("Yes")),
    ("yes.", Some("Yes")),
    ("Yes!", Some("Yes")),
    ("  yes  ", Some("Yes")),
    ("\"Yes\"", Some("Yes")),
    ("'yes'", Some("Yes")),
    ("\u{201C}Yes\u{201D}", Some("Yes")),
    ("Yes, it is.", Some("Yes")),
    ("yes - it binds iron", Some("Yes")),
    ("Yes; HFE is on chromosome 6", Some("Yes")),
    ("yes\n", Some("Yes")),
    ("\tYes", Some("Yes")),
    ("(yes)", Some("Yes")),
    ("Yes/No", Some("Yes")),
    ("yes, definitely", Some("Yes")),
    ("Yes it does", Some("Yes")),
    ("YES.", Some("Yes")),
    ("yEs", Some("Yes")),
    ("Yes...", Some("Yes")),
    ("yes:", Some("Yes")),
    ("*Yes*", Some("Yes")),
    ("Yes \u{2014} confirmed", Some("Yes")),
    ("no", Some("No")),
    ("No", Some("No")),
    ("NO", Some("No")),
    ("no.", Some("No")),
    ("No!", Some("No")),
    ("  no ", Some("No")),
    ("\"No\"", Some("No")),
    ("'no'", Some("No")),
    ("\u{201C}No\u{201D}", Some("No")),
    ("No, it is not.", Some("No")),
    ("no - it is a kinase", Some("No")),
    ("No; aspirin is an NSAID", Some("No")),
    ("(no)", Some("No")),
    ("No it does not", Some("No")),
    ("nO", Some("No")),
    ("No...", Some("No")),
    ("maybe", None),
    ("", None),
    ("   ", None),
    ("Nope", None),
    ("Yeah", None),
    ("It depends", None),
    ("unknown", None),
    ("Not really", None),
    ("The answer is yes", None),
    ("yesterday", None),
];

/// Title lookup stub: terms starting with a letter in `a..=m` resolve to
/// their title-cased form, everything else has no hit.
pub struct TitleCaseWiki;

pub fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl WikiClient for TitleCaseWiki {
    fn search_titles(&self, term: &str, _limit: usize) -> Result<Vec<String>, BackendError> {
        let first = term.chars().next().map(|c| c.to_ascii_lowercase());
        Ok(match first {
            Some('a'..='m') => vec![title_case(term)],
            _ => vec![],
        })
    }
    fn page_text(&self, _title: &str) -> Result<Option<String>, BackendError> {
        Ok(None)
    }
}

const PIECES: &[&str] = &[
    "the",
    "a",
    "an",
    "HFE",
    "gene",
    "iron",
    "p53",
    "kinase",
    "Marfan",
    "caf\u{e9}",
    "cafe\u{301}",
    "of",
    "yes",
    "no",
    "42",
    "mg",
    "\"",
    "'",
    "\u{201C}",
    "\u{201D}",
    ".",
    ",",
    "!",
    "?",
    ";",
    ":",
    "(",
    ")",
    "-",
    " ",
    "  ",
    "\t",
    "\n",
    "x",
    "BRCA1",
    "\u{3002}",
];

/// A random short-answer-like string.
pub fn random_answer(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..10);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        if rng.random_bool(0.6) {
            s.push(' ');
        }
    }
    s
}
