//! A 100-question scoring fixture with exactly 84 exact matches.

use std::fs;
use std::path::Path;

pub const N: usize = 100;
pub const MATCHES: usize = 84;

/// Writes `pred.jsonl`, `gold.jsonl` and `concepts.jsonl` into `dir`.
///
/// Matching predictions differ from the gold only in case, quotes, edge
/// punctuation or spacing. Of the 16 misses, 5 are synonyms listed in the
/// concept table.
pub fn write(dir: &Path) {
    let mut gold = String::new();
    let mut pred = String::new();
    for i in 0..N {
        let id = format!("q{i:03}");
        let answer = format!("Protein {i} kinase");
        let p = if i < MATCHES {
            match i % 4 {
                0 => answer.clone(),
                1 => answer.to_uppercase(),
                2 => format!("\"{answer}.\""),
                _ => format!("  protein  {i}   KINASE "),
            }
        } else if i < MATCHES + 5 {
            format!("PK{i}")
        } else {
            format!("Unrelated {i}")
        };
        gold.push_str(&serde_json::json!({"id": id, "answer": answer}).to_string());
        gold.push('\n');
        pred.push_str(
            &serde_json::json!({"id": id, "short_answer": p, "long_answer": p}).to_string(),
        );
        pred.push('\n');
    }
    let mut concepts = String::new();
    for i in MATCHES..MATCHES + 5 {
        let line = serde_json::json!({
            "concept_id": format!("C{i}"),
            "surface_forms": [format!("Protein {i} kinase"), format!("PK{i}")],
        });
        concepts.push_str(&line.to_string());
        concepts.push('\n');
    }
    fs::write(dir.join("gold.jsonl"), gold).unwrap();
    fs::write(dir.join("pred.jsonl"), pred).unwrap();
    fs::write(dir.join("concepts.jsonl"), concepts).unwrap();
}

pub const EXPECTED_TABLE: &str = "\
|  Run  |  ID  | Exact Match Score | Concept Level Score |
|-------|------|-------------------|---------------------|
| Run 1 | pred |       0.840       |        0.890        |
(Concept Level Score approximated with a synonym table)
";
