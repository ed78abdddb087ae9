//! Reference implementations the production code is checked against.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Dense brute-force TF-IDF cosine of every sentence against `query`.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the sentences; the query is
/// restricted to the sentence vocabulary.
pub fn brute_force_scores(sentences: &[String], query: &str) -> Vec<f64> {
    let docs: Vec<Vec<String>> = sentences.iter().map(|s| words(s)).collect();
    let mut vocab: BTreeMap<String, usize> = BTreeMap::new();
    for d in &docs {
        for w in d {
            let len = vocab.len();
            vocab.entry(w.clone()).or_insert(len);
        }
    }
    let v = vocab.len();
    let n = docs.len() as f64;
    let mut idf = vec![0.0; v];
    for (w, &j) in &vocab {
        let df = docs.iter().filter(|d| d.contains(w)).count() as f64;
        idf[j] = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
    }
    let dense = |tokens: &[String]| -> Vec<f64> {
        let mut x = vec![0.0; v];
        for t in tokens {
            if let Some(&j) = vocab.get(t) {
                x[j] += 1.0;
            }
        }
        for j in 0..v {
            x[j] *= idf[j];
        }
        x
    };
    let q = dense(&words(query));
    let qn = q.iter().map(|a| a * a).sum::<f64>().sqrt();
    docs.iter()
        .map(|d| {
            let x = dense(d);
            let xn = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if xn == 0.0 || qn == 0.0 {
                0.0
            } else {
                x.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() / (xn * qn)
            }
        })
        .collect()
}

/// Sentence indices best first; scores within `tol` count as tied and keep
/// input order.
pub fn oracle_order(scores: &[f64], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        if (scores[a] - scores[b]).abs() <= tol {
            a.cmp(&b)
        } else {
            scores[b].partial_cmp(&scores[a]).unwrap()
        }
    });
    idx
}

const VOCAB: &[&str] = &[
    "HFE",
    "gene",
    "iron",
    "the",
    "of",
    "liver",
    "protein",
    "BRCA1",
    "tumor",
    "cell",
    "is",
    "a",
    "mutation",
    "chromosome",
    "Marfan",
    "syndrome",
    "FBN1",
    "drug",
    "kinase",
    "imatinib",
    "in",
    "blood",
    "heart",
    "disease",
    "encodes",
    "binds",
    "receptor",
    "p53",
    "colon",
    "risk",
];

const PUNCT: &[&str] = &["", "", "", ",", ";", "-", "(", ")", "'s"];

pub fn random_sentence(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    let mut s = String::new();
    for i in 0..n {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(VOCAB[rng.random_range(0..VOCAB.len())]);
        s.push_str(PUNCT[rng.random_range(0..PUNCT.len())]);
    }
    s.push('.');
    s
}

/// Up to `max_sentences` random sentences, with occasional exact repeats.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_sentences: usize) -> Vec<String> {
    let n = rng.random_range(1..=max_sentences);
    let mut out: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n {
        if !out.is_empty() && rng.random_bool(0.1) {
            let j = rng.random_range(0..out.len());
            out.push(out[j].clone());
        } else {
            out.push(random_sentence(rng, 12));
        }
    }
    out
}

pub fn random_query(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=5);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.15) {
                "zzunknown".to_string()
            } else {
                VOCAB[rng.random_range(0..VOCAB.len())].to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// A sentence of exactly `n` whitespace tokens.
pub fn sentence_of_len(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
        .collect::<Vec<_>>()
        .join(" ")
}
