#![allow(dead_code)]

pub mod cases;
pub mod eval_fixture;
pub mod oracle;
pub mod world;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use hopqa_core::backends::{Dispatcher, Transcript};
use hopqa_core::classify::{synthetic::synthetic_dataset, train, ClassifierModel, TrainingConfig};
use hopqa_core::config::Config;
use hopqa_core::pipeline::{Backends, Pipeline};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn e2e_dir() -> PathBuf {
    fixtures_dir().join("e2e")
}

/// Settings used to train the committed fixture classifier.
pub fn fixture_training_config() -> TrainingConfig {
    TrainingConfig {
        n_trees: 30,
        max_depth: 4,
        seed: 2024,
        ..TrainingConfig::default()
    }
}

pub fn train_fixture_classifier() -> ClassifierModel {
    let data = synthetic_dataset(453, 2024);
    train(&data, &fixture_training_config())
        .expect("synthetic data trains")
        .0
}

/// A replay pipeline over the committed fixtures, with a fresh transcript
/// cursor and the given worker count.
pub fn replay_pipeline(workers: usize) -> Pipeline {
    let dir = e2e_dir();
    let mut config = Config::load(&dir.join("config.json")).expect("fixture config loads");
    config.workers = workers;
    let transcript =
        Transcript::open(config.transcript.as_ref().unwrap()).expect("transcript opens");
    let dispatcher = Dispatcher::replay(Arc::new(transcript));
    let model =
        ClassifierModel::load(config.classifier_model.as_ref().unwrap()).expect("model loads");
    Pipeline::new(config, Backends::shared(Arc::new(dispatcher)), model).expect("pipeline builds")
}
