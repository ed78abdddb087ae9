//! Question features: lexicon counts, structural counts and a hashed
//! TF-IDF bag-of-words embedding.

use serde::{Deserialize, Serialize};

use crate::text::{capitalized_spans, terms, token_count};

pub const WH_WORDS: &[&str] = &[
    "what", "which", "who", "whom", "whose", "where", "when", "why", "how",
];
pub const SUBORDINATORS: &[&str] = &[
    "that",
    "which",
    "whose",
    "where",
    "when",
    "after",
    "before",
    "caused",
    "associated",
    "related",
];
pub const COMPARATIVES: &[&str] = &[
    "most", "least", "first", "largest", "smallest", "earliest", "latest",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "do", "does", "did", "has", "have", "had",
    "can", "could", "will", "would", "should", "may", "might", "must",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "while", "whereas", "because", "if"];

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinguisticFeatures {
    pub wh_word_count: u32,
    pub subordinator_count: u32,
    pub comparative_marker_count: u32,
    /// Auxiliaries plus words of five or more letters ending in `-ed`/`-ing`.
    pub verb_like_count: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatures {
    pub token_count: u32,
    pub char_count: u32,
    /// `,` `;` `:` `(` characters plus coordinating/subordinating conjunctions.
    pub clause_marker_count: u32,
    pub capitalized_span_count: u32,
    /// Position of the first WH word over `token_count - 1`; 0 for a
    /// single-token question, 1 when there is no WH word.
    pub question_word_position_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub linguistic: LinguisticFeatures,
    pub structural: StructuralFeatures,
    pub embedding: Vec<f64>,
}

/// Number of non-embedding features in [`FeatureVector::to_dense`].
pub const HAND_FEATURES: usize = 9;

impl FeatureVector {
    /// Linguistic counts, structural counts, then the embedding.
    pub fn to_dense(&self) -> Vec<f64> {
        let l = &self.linguistic;
        let s = &self.structural;
        let mut v = Vec::with_capacity(HAND_FEATURES + self.embedding.len());
        v.extend([
            l.wh_word_count as f64,
            l.subordinator_count as f64,
            l.comparative_marker_count as f64,
            l.verb_like_count as f64,
            s.token_count as f64,
            s.char_count as f64,
            s.clause_marker_count as f64,
            s.capitalized_span_count as f64,
            s.question_word_position_ratio,
        ]);
        v.extend_from_slice(&self.embedding);
        v
    }
}

/// Maps text to a fixed-length vector.
pub trait TextEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Vec<f64>;
}

/// Feature-hashed bag of words weighted by a per-bucket IDF and
/// L2-normalized. An unfitted encoder uses IDF 1 everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashedTfIdfEncoder {
    pub dim: usize,
    pub idf: Vec<f64>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl HashedTfIdfEncoder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            idf: vec![1.0; dim],
        }
    }

    /// Fits bucket IDF on `texts` with `ln((1 + N) / (1 + df)) + 1`.
    pub fn fit<S: AsRef<str>>(dim: usize, texts: &[S]) -> Self {
        let mut df = vec![0usize; dim];
        for t in texts {
            let mut seen = vec![false; dim];
            for term in terms(t.as_ref()) {
                let b = Self::bucket(dim, &term);
                if !seen[b] {
                    seen[b] = true;
                    df[b] += 1;
                }
            }
        }
        let n = texts.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Self { dim, idf }
    }

    fn bucket(dim: usize, term: &str) -> usize {
        (fnv1a(term.as_bytes()) % dim as u64) as usize
    }
}

impl TextEncoder for HashedTfIdfEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if self.dim == 0 {
            return v;
        }
        for term in terms(text) {
            let b = Self::bucket(self.dim, &term);
            v[b] += self.idf[b];
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn count_in(terms: &[String], lexicon: &[&str]) -> u32 {
    terms
        .iter()
        .filter(|t| lexicon.contains(&t.as_str()))
        .count() as u32
}

fn is_wh_token(token: &str) -> bool {
    terms(token)
        .first()
        .is_some_and(|t| WH_WORDS.contains(&t.as_str()))
}

/// Extracts the feature vector of `question_text`. Pure and deterministic.
pub fn extract_features(question_text: &str, encoder: &dyn TextEncoder) -> FeatureVector {
    let text = question_text.trim();
    let words = terms(text);
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let n_tokens = token_count(text);

    let verb_like = words
        .iter()
        .filter(|w| {
            AUXILIARIES.contains(&w.as_str())
                || (w.chars().count() >= 5 && (w.ends_with("ed") || w.ends_with("ing")))
        })
        .count() as u32;

    let ratio = match tokens.iter().position(|t| is_wh_token(t)) {
        Some(_) if n_tokens <= 1 => 0.0,
        Some(i) => i as f64 / (n_tokens - 1) as f64,
        None => 1.0,
    };

    let punct_markers = text
        .chars()
        .filter(|c| matches!(c, ',' | ';' | ':' | '('))
        .count() as u32;

    FeatureVector {
        linguistic: LinguisticFeatures {
            wh_word_count: count_in(&words, WH_WORDS),
            subordinator_count: count_in(&words, SUBORDINATORS),
            comparative_marker_count: count_in(&words, COMPARATIVES),
            verb_like_count: verb_like,
        },
        structural: StructuralFeatures {
            token_count: n_tokens as u32,
            char_count: text.chars().count() as u32,
            clause_marker_count: punct_markers + count_in(&words, CONJUNCTIONS),
            capitalized_span_count: capitalized_spans(text).len() as u32,
            question_word_position_ratio: ratio,
        },
        embedding: encoder.encode(text),
    }
}
