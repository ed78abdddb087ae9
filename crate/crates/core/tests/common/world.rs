//! A small scripted world standing in for the live services when the
//! end-to-end fixtures are recorded.

use std::collections::HashMap;
use std::sync::Mutex;

use hopqa_core::backends::{BackendRequest, Endpoint, Transport, TransportError};
use hopqa_core::text::terms;
use serde_json::{json, Value};

pub enum Plan {
    Direct {
        sub_query: &'static str,
        anchor: &'static str,
    },
    Steps(&'static [(&'static str, &'static str)], &'static str),
    /// The planner never returns anything parseable.
    Broken,
}

pub struct Case {
    pub id: &'static str,
    pub question: &'static str,
    pub simplified: Option<&'static str>,
    pub plan: Plan,
}

pub const CASES: &[Case] = &[
    Case {
        id: "bq01",
        question: "Is aspirin an NSAID?",
        simplified: None,
        plan: Plan::Direct { sub_query: "aspirin NSAID", anchor: "aspirin" },
    },
    Case {
        id: "bq02",
        question: "Is Marfan syndrome inherited?",
        simplified: None,
        plan: Plan::Direct { sub_query: "Marfan syndrome inheritance", anchor: "Marfan syndrome" },
    },
    Case {
        id: "bq03",
        question: "Who discovered penicillin?",
        simplified: None,
        plan: Plan::Direct { sub_query: "penicillin discovery", anchor: "penicillin" },
    },
    Case {
        id: "bq04",
        question: "How many chromosomes do humans have?",
        simplified: None,
        plan: Plan::Direct { sub_query: "human chromosome number", anchor: "humans" },
    },
    Case {
        id: "bq05",
        question: "Which chromosome contains the gene most commonly associated with hereditary hemochromatosis in people of Celtic descent?",
        simplified: None,
        plan: Plan::Steps(
            &[
                (
                    "Which gene is most commonly associated with hereditary hemochromatosis in people of Celtic descent?",
                    "hereditary hemochromatosis gene Celtic",
                ),
                ("Which chromosome contains that gene?", "gene chromosome"),
            ],
            "hereditary hemochromatosis",
        ),
    },
    Case {
        id: "bq06",
        question: "Which chromosome carries the gene that is mutated in Marfan syndrome?",
        simplified: None,
        plan: Plan::Steps(
            &[
                ("Which gene is mutated in Marfan syndrome?", "Marfan syndrome gene"),
                ("Which chromosome carries that gene?", "gene chromosome location"),
            ],
            "Marfan syndrome",
        ),
    },
    Case {
        id: "bq07",
        question: "What enzyme is deficient in the disorder that is detected by the Guthrie test?",
        simplified: None,
        plan: Plan::Steps(
            &[
                ("Which disorder is detected by the Guthrie test?", "Guthrie test disorder"),
                ("What enzyme is deficient in that disorder?", "deficient enzyme"),
            ],
            "Guthrie test",
        ),
    },
    Case {
        id: "bq08",
        question: "Which chromosome holds the gene for the enzyme that is deficient in phenylketonuria?",
        simplified: None,
        plan: Plan::Steps(
            &[
                ("Which enzyme is deficient in phenylketonuria?", "phenylketonuria enzyme"),
                ("Which gene encodes that enzyme?", "enzyme gene"),
                ("Which chromosome holds that gene?", "gene chromosome"),
            ],
            "phenylketonuria",
        ),
    },
    Case {
        id: "bq09",
        question: "Iron overload can harm the liver and the heart. Which gene is most often mutated in hereditary hemochromatosis?",
        simplified: Some("Which gene is most often mutated in hereditary hemochromatosis?"),
        plan: Plan::Direct { sub_query: "hemochromatosis gene", anchor: "hereditary hemochromatosis" },
    },
    Case {
        id: "bq10",
        question: "What class of drug is imatinib?",
        simplified: None,
        plan: Plan::Direct { sub_query: "imatinib drug class", anchor: "imatinib" },
    },
    Case {
        id: "bq11",
        question: "What is the normal pH of human blood?",
        simplified: None,
        plan: Plan::Direct { sub_query: "normal blood pH", anchor: "blood" },
    },
    Case {
        id: "bq12",
        question: "Which receptor is blocked by the drug that was withdrawn after the thalidomide disaster was reported?",
        simplified: None,
        plan: Plan::Broken,
    },
];

/// `(sub_question, long answer, short answer)`.
const ANSWERS: &[(&str, &str, &str)] = &[
    ("Is aspirin an NSAID?", "Aspirin inhibits cyclooxygenase and is classed as a nonsteroidal anti-inflammatory drug.", "yes."),
    ("Is Marfan syndrome inherited?", "Marfan syndrome follows an autosomal dominant pattern of inheritance.", "Yes, it is inherited"),
    ("Who discovered penicillin?", "Penicillin was discovered in 1928 by Alexander Fleming at St Mary's Hospital in London.", "alexander fleming"),
    ("How many chromosomes do humans have?", "A typical human cell carries 23 pairs, so 46 chromosomes in total.", "46 chromosomes."),
    (
        "Which gene is most commonly associated with hereditary hemochromatosis in people of Celtic descent?",
        "Most cases in people of Celtic descent are caused by the C282Y variant of HFE.",
        "HFE",
    ),
    ("Which chromosome contains that gene?", "The HFE gene sits on the short arm of chromosome 6.", "chromosome 6"),
    ("Which gene is mutated in Marfan syndrome?", "Marfan syndrome is caused by mutations in FBN1, which encodes fibrillin-1.", "FBN1"),
    ("Which chromosome carries that gene?", "FBN1 is located on the long arm of chromosome 15.", "Chromosome 15"),
    ("Which disorder is detected by the Guthrie test?", "The Guthrie heel-prick test screens newborns for phenylketonuria.", "phenylketonuria"),
    ("What enzyme is deficient in that disorder?", "Phenylketonuria results from deficient phenylalanine hydroxylase activity.", "phenylalanine hydroxylase"),
    ("Which enzyme is deficient in phenylketonuria?", "Phenylketonuria is caused by a lack of phenylalanine hydroxylase.", "phenylalanine hydroxylase"),
    ("Which gene encodes that enzyme?", "Phenylalanine hydroxylase is encoded by the PAH gene.", "the PAH gene"),
    ("Which chromosome holds that gene?", "The PAH gene maps to chromosome 12.", "chromosome 12"),
    ("Which gene is most often mutated in hereditary hemochromatosis?", "The HFE gene is the one most often mutated in hereditary hemochromatosis.", "HFE"),
    ("What class of drug is imatinib?", "Imatinib blocks the BCR-ABL kinase and belongs to the tyrosine kinase inhibitors.", "a tyrosine kinase inhibitor"),
    ("What is the normal pH of human blood?", "Arterial blood is kept in a narrow range around 7.4.", "7.35 to 7.45"),
];

/// Sub-questions whose first two answer calls return prose.
const FLAKY: &[&str] = &["What class of drug is imatinib?"];

/// Titles returned by the title search for a normalized short answer.
const TITLES: &[(&str, &str)] = &[
    ("alexander fleming", "Alexander Fleming"),
    ("hfe", "HFE gene"),
    ("chromosome 6", "Chromosome 6"),
    ("fbn1", "Fibrillin"),
    ("chromosome 15", "Chromosome 15"),
    ("phenylketonuria", "Phenylketonuria"),
    ("phenylalanine hydroxylase", "Phenylalanine hydroxylase"),
    ("pah gene", "Phenylalanine hydroxylase"),
    ("pah", "PAH"),
    ("chromosome 12", "Chromosome 12"),
    ("tyrosine kinase inhibitor", "Tyrosine kinase inhibitor"),
];

struct Doc {
    title: &'static str,
    link: &'static str,
    snippet: &'static str,
    keywords: &'static [&'static str],
}

const DOCS: &[Doc] = &[
    Doc {
        title: "Aspirin",
        link: "https://en.wikipedia.org/wiki/Aspirin",
        snippet: "Aspirin is a nonsteroidal anti-inflammatory drug used to reduce pain and fever.",
        keywords: &["aspirin", "nsaid"],
    },
    Doc {
        title: "NSAIDs overview",
        link: "https://example.org/nsaids",
        snippet: "NSAIDs include ibuprofen, naproxen and aspirin.",
        keywords: &["nsaid"],
    },
    Doc {
        title: "Marfan syndrome",
        link: "https://en.wikipedia.org/wiki/Marfan_syndrome",
        snippet: "Marfan syndrome is a genetic disorder of connective tissue.",
        keywords: &["marfan"],
    },
    Doc {
        title: "Broken link",
        link: "not a url",
        snippet: "This result has an unusable link and should be dropped.",
        keywords: &["marfan", "inheritance"],
    },
    Doc {
        title: "Penicillin history",
        link: "https://example.org/penicillin-history",
        snippet: "Alexander Fleming noticed in 1928 that a mould killed bacteria in his culture plates.",
        keywords: &["penicillin"],
    },
    Doc {
        title: "Human genome",
        link: "https://example.org/karyotype",
        snippet: "The human karyotype has 46 chromosomes: 22 pairs of autosomes and one pair of sex chromosomes.",
        keywords: &["chromosome", "karyotype"],
    },
    Doc {
        title: "Hereditary hemochromatosis",
        link: "https://en.wikipedia.org/wiki/Hereditary_haemochromatosis",
        snippet: "Hereditary hemochromatosis is most often caused by HFE mutations, especially C282Y.",
        keywords: &["hemochromatosis", "hfe"],
    },
    Doc {
        title: "HFE gene",
        link: "https://en.wikipedia.org/wiki/HFE_gene",
        snippet: "The HFE gene is located on chromosome 6 at 6p22.2.",
        keywords: &["hfe"],
    },
    Doc {
        title: "Fibrillin",
        link: "https://en.wikipedia.org/wiki/Fibrillin",
        snippet: "FBN1 on chromosome 15 encodes fibrillin-1.",
        keywords: &["fbn1", "fibrillin"],
    },
    Doc {
        title: "Guthrie test",
        link: "https://en.wikipedia.org/wiki/Guthrie_test",
        snippet: "The Guthrie test is a newborn screen for phenylketonuria.",
        keywords: &["guthrie"],
    },
    Doc {
        title: "Phenylketonuria",
        link: "https://en.wikipedia.org/wiki/Phenylketonuria",
        snippet: "Phenylketonuria is an inborn error of metabolism caused by loss of phenylalanine hydroxylase.",
        keywords: &["phenylketonuria"],
    },
    Doc {
        title: "PAH",
        link: "https://example.org/pah-gene",
        snippet: "The PAH gene on chromosome 12q23.2 encodes phenylalanine hydroxylase.",
        keywords: &["pah", "hydroxylase"],
    },
    Doc {
        title: "Imatinib",
        link: "https://en.wikipedia.org/wiki/Imatinib",
        snippet: "Imatinib is a tyrosine kinase inhibitor used for chronic myeloid leukemia.",
        keywords: &["imatinib"],
    },
];

fn page(title: &str) -> Option<String> {
    let text = match title {
        "Aspirin" => "Aspirin, also known as acetylsalicylic acid, is a medication used to reduce pain, fever, or inflammation.\n\
            Aspirin is a nonsteroidal anti-inflammatory drug. It irreversibly inhibits cyclooxygenase.\n\
            Aspirin was first isolated in 1897.",
        "Marfan syndrome" => "Marfan syndrome is a multi-systemic genetic disorder that affects the connective tissue.\n\
            It is inherited in an autosomal dominant pattern. About 75% of cases are inherited from a parent.\n\
            The disorder is caused by mutations in FBN1.",
        "Hereditary haemochromatosis" => return Some(hemochromatosis_page()),
        "HFE gene" => "HFE is a gene that encodes the human homeostatic iron regulator protein.\n\
            The HFE gene is located on the short arm of chromosome 6. The C282Y mutation is the most common cause of hereditary hemochromatosis.",
        "Fibrillin" => "Fibrillin is a glycoprotein essential for elastic fibers.\n\
            Fibrillin-1 is encoded by FBN1, found on chromosome 15. Mutations in FBN1 cause Marfan syndrome.",
        "Guthrie test" => "The Guthrie test is a bacterial inhibition assay. It screens newborn infants for phenylketonuria.",
        "Phenylketonuria" => "Phenylketonuria (PKU) is an inborn error of metabolism. It results in decreased metabolism of phenylalanine.\n\
            PKU is caused by mutations in the PAH gene. The gene encodes phenylalanine hydroxylase.",
        "Imatinib" => "Imatinib is an oral chemotherapy medication. It is a tyrosine kinase inhibitor that blocks BCR-ABL.",
        _ => return None,
    };
    Some(text.to_string())
}

/// A long article so the 300-token budget actually bites.
fn hemochromatosis_page() -> String {
    let mut s = String::from(
        "Hereditary haemochromatosis is a genetic disorder characterized by excessive intestinal absorption of dietary iron.\n\
         The most common form is caused by mutations in the HFE gene. The C282Y variant is frequent in people of Celtic descent.\n",
    );
    for i in 1..=40 {
        s.push_str(&format!(
            "Clinical note {i} describes iron studies, ferritin levels and liver biopsy findings in patient group {i}. "
        ));
    }
    s
}

fn llm_text(text: &str) -> Result<String, TransportError> {
    Ok(json!({ "text": text }).to_string())
}

#[derive(Default)]
pub struct FakeWorld {
    calls: Mutex<HashMap<String, usize>>,
}

impl FakeWorld {
    fn bump(&self, key: &str) -> usize {
        let mut c = self.calls.lock().unwrap();
        let n = c.entry(key.to_string()).or_insert(0);
        *n += 1;
        *n
    }

    fn case_for(user: &str) -> &'static Case {
        let q = user
            .lines()
            .map(|l| l.trim_start_matches("Question:").trim())
            .find(|l| !l.is_empty())
            .unwrap_or("");
        CASES
            .iter()
            .find(|c| c.question == q || c.simplified == Some(q))
            .unwrap_or_else(|| panic!("no fake case for question {q:?}"))
    }

    fn llm(&self, p: &Value) -> Result<String, TransportError> {
        let system = p["system_text"].as_str().unwrap_or("");
        let user = p["user_text"].as_str().unwrap_or("");
        if system.contains("edit biomedical questions") {
            let case = Self::case_for(user);
            return llm_text(case.simplified.unwrap_or(case.question));
        }
        if system.contains("plan lookups") {
            let case = Self::case_for(user);
            let steps: Vec<Value> = match &case.plan {
                Plan::Steps(steps, anchor) => steps
                    .iter()
                    .enumerate()
                    .map(|(i, (q, k))| {
                        if i == 0 {
                            json!({"sub_question": q, "sub_query": k, "anchor": anchor})
                        } else {
                            json!({"sub_question": q, "sub_query": k})
                        }
                    })
                    .collect(),
                Plan::Direct { sub_query, anchor } => {
                    vec![
                        json!({"sub_question": case.simplified.unwrap_or(case.question), "sub_query": sub_query, "anchor": anchor}),
                    ]
                }
                Plan::Broken => return llm_text("I am not sure how to split this question."),
            };
            return llm_text(&format!("```json\n{}\n```", Value::Array(steps)));
        }
        if system.contains("prepare a biomedical question") {
            let case = Self::case_for(user);
            return match &case.plan {
                Plan::Direct { sub_query, anchor } => {
                    llm_text(&json!({"sub_query": sub_query, "anchor": anchor}).to_string())
                }
                Plan::Steps(steps, anchor) => {
                    llm_text(&json!({"sub_query": steps[0].1, "anchor": anchor}).to_string())
                }
                Plan::Broken => llm_text("Sorry, I cannot help with that."),
            };
        }
        if system.contains("answer biomedical questions") {
            let sub_q = user
                .lines()
                .find_map(|l| l.strip_prefix("Sub-question: "))
                .unwrap_or("");
            let (_, long, short) = ANSWERS
                .iter()
                .find(|(q, _, _)| *q == sub_q)
                .unwrap_or_else(|| panic!("no fake answer for {sub_q:?}"));
            if FLAKY.contains(&sub_q) && self.bump(sub_q) <= 2 {
                return llm_text("Let me think about this step by step.");
            }
            return llm_text(&json!({"long_answer": long, "short_answer": short}).to_string());
        }
        panic!("unrecognized prompt: {system}")
    }

    fn search(&self, p: &Value) -> Result<String, TransportError> {
        let query = terms(p["query"].as_str().unwrap_or(""));
        let limit = p["limit"].as_u64().unwrap_or(10) as usize;
        let hits: Vec<Value> = DOCS
            .iter()
            .filter(|d| d.keywords.iter().any(|k| query.iter().any(|t| t == k)))
            .take(limit)
            .map(|d| json!({"title": d.title, "link": d.link, "snippet": d.snippet}))
            .collect();
        Ok(Value::Array(hits).to_string())
    }

    fn wiki_search(&self, p: &Value) -> Result<String, TransportError> {
        let term = p["term"].as_str().unwrap_or("").trim().to_lowercase();
        let found: Vec<&str> = TITLES
            .iter()
            .filter(|(k, _)| *k == term)
            .map(|(_, t)| *t)
            .collect();
        Ok(json!(found).to_string())
    }
}

impl Transport for FakeWorld {
    fn send(&self, request: &BackendRequest) -> Result<String, TransportError> {
        let p = request.payload_value();
        match request.endpoint {
            Endpoint::LlmComplete => self.llm(&p),
            Endpoint::WebSearch => self.search(&p),
            Endpoint::WikiSearch => self.wiki_search(&p),
            Endpoint::WikiPage => {
                let title = p["title"].as_str().unwrap_or("");
                Ok(json!({"title": title, "text": page(title)}).to_string())
            }
        }
    }
}
