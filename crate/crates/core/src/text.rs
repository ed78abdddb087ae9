//! Text primitives shared across the pipeline: token counting, Unicode
//! normalization, sentence splitting and term extraction.
//!
//! Every length limit in the crate (simplified-question length, Wikipedia
//! token budget, hop validation) goes through [`token_count`], so swapping
//! the tokenizer means touching one function.

use unicode_normalization::UnicodeNormalization;

/// Whitespace-delimited token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// NFC-normalized copy of `text`.
pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Collapses every run of whitespace into a single space and trims the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased alphanumeric terms; every non-alphanumeric character is a separator.
pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Abbreviations that never end a sentence even when followed by a capital.
const ABBREVIATIONS: &[&str] = &[
    "dr", "mr", "mrs", "ms", "prof", "st", "sr", "jr", "vs", "etc", "e.g", "i.e", "fig", "approx",
    "no", "vol",
];

fn ends_with_abbreviation(segment: &str) -> bool {
    let last = segment
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_end_matches('.')
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    ABBREVIATIONS.contains(&last.as_str())
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

/// Splits text into sentences.
///
/// Lines are split first (each non-blank line is its own block). Within a
/// block a boundary sits after `.`, `?` or `!` (plus any closing quotes or
/// brackets) when the next non-space character is an uppercase letter and
/// at least one whitespace character separates them. A period closing one
/// of a handful of abbreviations (`Dr.`, `e.g.`, ...) is not a boundary.
/// Sentences are trimmed and never empty.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        split_block(line, &mut out);
    }
    out
}

fn split_block(block: &str, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = block.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '?' | '!') {
            let mut end = i + 1;
            while end < chars.len() && is_closing(chars[end].1) {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let has_space = next > end;
            let upper_follows = next < chars.len() && chars[next].1.is_uppercase();
            if has_space && upper_follows {
                let byte_end = chars.get(end).map(|&(b, _)| b).unwrap_or(block.len());
                let candidate = &block[start..byte_end];
                if !(c == '.' && ends_with_abbreviation(candidate)) {
                    push_trimmed(candidate, out);
                    start = chars[next].0;
                    i = next;
                    continue;
                }
            }
            i = end;
            continue;
        }
        i += 1;
    }
    push_trimmed(&block[start..], out);
}

fn push_trimmed(s: &str, out: &mut Vec<String>) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

fn starts_uppercase(token: &str) -> bool {
    token
        .chars()
        .find(|c| c.is_alphanumeric())
        .is_some_and(|c| c.is_uppercase())
}

/// Maximal runs of consecutive capitalized whitespace tokens, ignoring the
/// text's first token (sentence-initial capitals carry no signal). Trailing
/// punctuation is stripped from the returned spans.
pub fn capitalized_spans(text: &str) -> Vec<String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut spans = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 && starts_uppercase(tok) {
            current.push(tok);
            // punctuation that closes a clause ends the span
            if tok.ends_with([',', ';', ':', '?', '.', '!']) {
                spans.push(finish_span(&current));
                current.clear();
            }
        } else if !current.is_empty() {
            spans.push(finish_span(&current));
            current.clear();
        }
    }
    if !current.is_empty() {
        spans.push(finish_span(&current));
    }
    spans.retain(|s| !s.is_empty());
    spans
}

fn finish_span(tokens: &[&str]) -> String {
    tokens
        .join(" ")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// The longest capitalized span (by token count, earliest wins on ties).
pub fn longest_capitalized_span(text: &str) -> Option<String> {
    let mut best: Option<String> = None;
    for span in capitalized_spans(text) {
        let better = match &best {
            None => true,
            Some(b) => token_count(&span) > token_count(b),
        };
        if better {
            best = Some(span);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_whitespace_tokens() {
        assert_eq!(token_count("Is aspirin an NSAID?"), 4);
        assert_eq!(token_count("  Why?  "), 1);
        assert_eq!(token_count(""), 0);
    }

    #[test]
    fn splits_two_declaratives() {
        assert_eq!(
            split_sentences("A is B. C is D."),
            vec!["A is B.", "C is D."]
        );
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n  ").is_empty());
    }

    #[test]
    fn lowercase_after_period_is_not_a_boundary() {
        // "E." is followed by "coli": lowercase, so no split there.
        assert_eq!(
            split_sentences("E. coli causes infection. It spreads."),
            vec!["E. coli causes infection.", "It spreads."]
        );
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(
            split_sentences("It was described by Dr. Smith in 1900. Later work followed."),
            vec![
                "It was described by Dr. Smith in 1900.",
                "Later work followed."
            ]
        );
    }

    #[test]
    fn lines_are_blocks() {
        assert_eq!(
            split_sentences("== Causes ==\nThe gene is HFE.\n\nIt is on chromosome 6"),
            vec!["== Causes ==", "The gene is HFE.", "It is on chromosome 6"]
        );
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(
            split_sentences("He said \"stop.\" Then left?"),
            vec!["He said \"stop.\"", "Then left?"]
        );
    }

    #[test]
    fn terms_split_on_punctuation() {
        assert_eq!(
            terms("The HFE-gene, chromosome 6."),
            vec!["the", "hfe", "gene", "chromosome", "6"]
        );
    }

    #[test]
    fn capitalized_span_detection() {
        assert_eq!(
            capitalized_spans("Is Marfan syndrome inherited?"),
            vec!["Marfan"]
        );
        assert_eq!(
            longest_capitalized_span(
                "Which gene causes Hereditary Hemochromatosis in Celtic people?"
            ),
            Some("Hereditary Hemochromatosis".to_string())
        );
        assert_eq!(longest_capitalized_span("what causes scurvy?"), None);
    }

    #[test]
    fn nfc_composes() {
        assert_eq!(nfc("nai\u{0308}ve"), "na\u{00EF}ve");
    }
}
