//! Fixed-seed generator of labelled biomedical-style questions.
//!
//! Direct questions ask one fact about a named entity. Sequential ones nest
//! a second lookup inside the first ("the gene that ...", "the organ most
//! affected by ..."). A handful of templates on each side are deliberately
//! close to the other class so the task is not a pure length test.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainingExample;
use crate::model::QuestionKind;

const DISEASES: &[&str] = &[
    "cystic fibrosis",
    "Marfan syndrome",
    "hereditary hemochromatosis",
    "sickle cell anemia",
    "Huntington disease",
    "phenylketonuria",
    "Tay-Sachs disease",
    "Wilson disease",
    "Gaucher disease",
    "Fabry disease",
    "hemophilia A",
    "Duchenne muscular dystrophy",
    "Lynch syndrome",
    "Ehlers-Danlos syndrome",
    "neurofibromatosis type 1",
    "scurvy",
    "tuberculosis",
    "malaria",
    "Lyme disease",
    "psoriasis",
];

const DRUGS: &[&str] = &[
    "aspirin",
    "metformin",
    "warfarin",
    "imatinib",
    "ibuprofen",
    "tamoxifen",
    "lisinopril",
    "atorvastatin",
    "omeprazole",
    "penicillin",
    "rifampicin",
    "methotrexate",
];

const ORGANS: &[&str] = &[
    "liver", "kidney", "lung", "heart", "pancreas", "brain", "spleen", "skin",
];

const POPULATIONS: &[&str] = &[
    "Celtic",
    "Ashkenazi Jewish",
    "Finnish",
    "Sardinian",
    "Amish",
    "Icelandic",
];

const ATTRIBUTES: &[&str] = &[
    "chromosome",
    "enzyme",
    "protein",
    "receptor",
    "cell type",
    "pathway",
];

type Template = fn(&mut ChaCha8Rng) -> String;

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or_default()
}

const DIRECT: &[Template] = &[
    |r| format!("What is {}?", pick(r, DISEASES)),
    |r| format!("Is {} an NSAID?", pick(r, DRUGS)),
    |r| format!("What are the symptoms of {}?", pick(r, DISEASES)),
    |r| format!("Which organ does {} damage?", pick(r, DISEASES)),
    |r| format!("Is {} inherited?", pick(r, DISEASES)),
    |r| format!("How is {} treated?", pick(r, DISEASES)),
    |r| format!("What class of drug is {}?", pick(r, DRUGS)),
    |r| format!("Does {} affect the {}?", pick(r, DRUGS), pick(r, ORGANS)),
    |r| format!("Who discovered {}?", pick(r, DRUGS)),
    |r| format!("How many people have {}?", pick(r, DISEASES)),
    |r| format!("Can {} cause {} failure?", pick(r, DRUGS), pick(r, ORGANS)),
    // near the boundary: long, but still a single lookup
    |r| {
        format!(
            "What are the early signs of {} in children and adults?",
            pick(r, DISEASES)
        )
    },
];

const SEQUENTIAL: &[Template] = &[
    |r| {
        format!(
            "Which {} contains the gene most commonly associated with {} in people of {} descent?",
            pick(r, ATTRIBUTES),
            pick(r, DISEASES),
            pick(r, POPULATIONS)
        )
    },
    |r| {
        format!(
            "What {} is encoded by the gene that is mutated in {}?",
            pick(r, ATTRIBUTES),
            pick(r, DISEASES)
        )
    },
    |r| {
        format!(
            "Which organ is most affected by the disease that {} was first developed to treat?",
            pick(r, DRUGS)
        )
    },
    |r| {
        format!(
            "Where is the {} that metabolizes {} expressed, and which drugs inhibit it?",
            pick(r, ATTRIBUTES),
            pick(r, DRUGS)
        )
    },
    |r| {
        format!(
            "Who first described the {} that is related to {} after it was linked to {}?",
            pick(r, ATTRIBUTES),
            pick(r, DISEASES),
            pick(r, DRUGS)
        )
    },
    |r| {
        format!(
            "What is the function of the protein produced by the gene associated with {}?",
            pick(r, DISEASES)
        )
    },
    |r| {
        format!(
            "Which drug targets the {} that is overactive in {}, and when was it approved?",
            pick(r, ATTRIBUTES),
            pick(r, DISEASES)
        )
    },
    // near the boundary: short surface form, but needs the gene first
    |r| format!("Where is the gene for {} located?", pick(r, DISEASES)),
];

/// `n` examples with roughly 45% sequential, shuffled, reproducible from
/// `seed`.
pub fn synthetic_dataset(n: usize, seed: u64) -> Vec<TrainingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let sequential = rng.random_bool(0.45);
            let (templates, label) = if sequential {
                (SEQUENTIAL, QuestionKind::Sequential)
            } else {
                (DIRECT, QuestionKind::Direct)
            };
            let t = templates[rng.random_range(0..templates.len())];
            TrainingExample {
                question_text: t(&mut rng),
                label,
            }
        })
        .collect()
}

/// Splits into `(train, test)` with `test_fraction` of the rows held out,
/// after a seeded shuffle.
pub fn train_test_split(
    examples: &[TrainingExample],
    test_fraction: f64,
    seed: u64,
) -> (Vec<TrainingExample>, Vec<TrainingExample>) {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..examples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((examples.len() as f64) * test_fraction).round() as usize;
    let test = idx[..n_test].iter().map(|&i| examples[i].clone()).collect();
    let train = idx[n_test..].iter().map(|&i| examples[i].clone()).collect();
    (train, test)
}
