//! Pick the explanation with the lowest loss under a generative model.
//!
//! Losses are per-token mean cross-entropy of each option given the
//! statement, so the minimum loss is also the minimum perplexity.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{ChoiceExample, Dataset, Labeled};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{self, PredictionVector};

pub const OPTION_COUNT: usize = 3;

/// Per-example losses of the three options.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    source_model: String,
    rows: Vec<(String, [f64; OPTION_COUNT])>,
}

impl LossTable {
    pub fn new(
        source_model: impl Into<String>,
        rows: impl IntoIterator<Item = (String, [f64; OPTION_COUNT])>,
    ) -> Result<Self> {
        let source_model = source_model.into();
        let rows: Vec<_> = rows.into_iter().collect();
        let mut seen = HashMap::with_capacity(rows.len());
        for (id, losses) in &rows {
            if losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(Error::invalid(format!(
                    "{source_model}: id {id:?} has a negative or non-finite loss"
                )));
            }
            if seen.insert(id.as_str(), ()).is_some() {
                return Err(Error::invalid(format!("{source_model}: duplicate id {id:?}")));
            }
        }
        Ok(Self { source_model, rows })
    }

    pub fn source_model(&self) -> &str {
        &self.source_model
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64; OPTION_COUNT])> {
        self.rows.iter().map(|(id, l)| (id.as_str(), l))
    }
}

#[derive(Deserialize)]
struct LossLine {
    id: String,
    losses: Vec<f64>,
}

/// Load `{"id": ..., "losses": [l0, l1, l2]}` lines; the source model is the file stem.
pub fn load_losses(path: impl AsRef<Path>) -> Result<LossTable> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for (line, record) in jsonl::read::<LossLine>(path)? {
        let losses: [f64; OPTION_COUNT] =
            record.losses.try_into().map_err(|v: Vec<f64>| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message: format!("expected {OPTION_COUNT} losses, found {}", v.len()),
            })?;
        rows.push((record.id, losses));
    }
    LossTable::new(jsonl::stem(path), rows).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v < row[best] {
            best = i;
        }
    }
    best
}

/// Per id, the option with the lowest loss.
pub fn select_by_min_loss(table: &LossTable) -> PredictionVector {
    table
        .rows()
        .map(|(id, losses)| (id.to_string(), argmin(losses)))
        .collect()
}

/// Accuracy of [`select_by_min_loss`] against labeled choice examples.
pub fn evaluate_choices(table: &LossTable, golds: &Dataset<ChoiceExample>) -> Result<f64> {
    if let Some(e) = golds.iter().find(|e| e.label().is_none()) {
        return Err(Error::Unlabeled(e.id.clone()));
    }
    metrics::accuracy(&select_by_min_loss(table), &golds.labels()?)
}
