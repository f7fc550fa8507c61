//! Reproducible evaluation pipeline for the three commonsense validation and
//! explanation subtasks: dataset I/O, metrics, ensemble-subset search over
//! saved model probabilities, minimum-loss option selection, reranking of
//! generated explanations, round-trip translation augmentation and
//! BLEU-vs-human analysis.
//!
//! Neural models are external: they produce the probability, loss and score
//! files this crate consumes.

pub mod analysis;
pub mod augment;
pub mod choice_scoring;
pub mod cli;
pub mod dataset;
pub mod ensemble;
mod error;
pub(crate) mod jsonl;
pub mod metrics;
pub mod report;
pub mod rerank;

pub use error::{Error, Result};
