//! TF-IDF sentence ranking.
//!
//! Each sentence is one document. `tf` is the raw term count, `idf` is the
//! smoothed `ln((1 + N) / (1 + df)) + 1`, vectors are L2-normalized and the
//! score is the cosine between a sentence and the query projected into the
//! sentences' vocabulary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::terms;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSentence {
    pub sentence: String,
    /// Cosine similarity in `[0, 1]`.
    pub score: f64,
    /// Position of the sentence in the input list.
    pub source_order: usize,
}

/// Scores closer than this are treated as ties (and fall back to input
/// order), so floating-point summation noise cannot reorder equal scores.
const TIE_GRID: f64 = 1e12;

type SparseVec = Vec<(usize, f64)>;

struct Vocabulary {
    ids: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl Vocabulary {
    fn build(docs: &[Vec<String>]) -> Self {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut df: Vec<usize> = Vec::new();
        for doc in docs {
            let mut seen: Vec<usize> = Vec::new();
            for t in doc {
                let next = ids.len();
                let id = *ids.entry(t.clone()).or_insert(next);
                if id == df.len() {
                    df.push(0);
                }
                if !seen.contains(&id) {
                    seen.push(id);
                    df[id] += 1;
                }
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Self { ids, idf }
    }

    /// L2-normalized TF-IDF vector sorted by term id; out-of-vocabulary
    /// terms are dropped.
    fn vectorize(&self, tokens: &[String]) -> SparseVec {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in tokens {
            if let Some(&id) = self.ids.get(t) {
                *counts.entry(id).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVec = counts
            .into_iter()
            .map(|(id, tf)| (id, tf * self.idf[id]))
            .collect();
        v.sort_by_key(|&(id, _)| id);
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut v {
                *w /= norm;
            }
        }
        v
    }
}

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Ranks `sentences` by cosine similarity to `query`, best first; ties keep
/// input order.
pub fn rank_sentences_tfidf(sentences: &[String], query: &str) -> Vec<RankedSentence> {
    if sentences.is_empty() {
        return Vec::new();
    }
    let docs: Vec<Vec<String>> = sentences.iter().map(|s| terms(s)).collect();
    let vocab = Vocabulary::build(&docs);
    let q = vocab.vectorize(&terms(query));

    let mut ranked: Vec<RankedSentence> = docs
        .iter()
        .zip(sentences)
        .enumerate()
        .map(|(i, (doc, sentence))| RankedSentence {
            sentence: sentence.clone(),
            score: dot(&vocab.vectorize(doc), &q).clamp(0.0, 1.0),
            source_order: i,
        })
        .collect();
    ranked.sort_by(|a, b| {
        let ka = (a.score * TIE_GRID).round() as i64;
        let kb = (b.score * TIE_GRID).round() as i64;
        kb.cmp(&ka).then(a.source_order.cmp(&b.source_order))
    });
    ranked
}
