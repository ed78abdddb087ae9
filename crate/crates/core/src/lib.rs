//! Multi-hop biomedical question answering: question routing, decomposition,
//! retrieval, answer generation, normalization and evaluation.

pub mod backends;
pub mod classify;
pub mod config;
pub mod decompose;
pub mod evaluate;
pub mod generate;
pub mod model;
pub mod normalize;
pub mod par;
pub mod pipeline;
pub mod prompt;
pub mod retrieve;
pub mod text;
