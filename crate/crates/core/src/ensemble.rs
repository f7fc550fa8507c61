//! Probability averaging and exhaustive ensemble-subset search.
//!
//! Every non-empty subset of the candidate models is scored on the dev set
//! by averaging the members' class probabilities and taking the argmax. The
//! best subset wins; equal scores go to the smaller subset, then to the
//! lexicographically smallest sorted tuple of model ids.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{self, PredictionVector};

/// Largest candidate pool accepted by [`search_best_subset`].
pub const MAX_MODELS: usize = 20;

/// Tolerance on a probability row summing to one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Per-example class probabilities of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    model_id: String,
    class_count: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    // row-major, ids.len() * class_count
    values: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(
        model_id: impl Into<String>,
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        let mut ids = Vec::new();
        let mut index = HashMap::new();
        let mut values = Vec::new();
        let mut class_count = 0;
        for (id, row) in rows {
            if ids.is_empty() {
                class_count = row.len();
                if class_count < 2 {
                    return Err(Error::invalid(format!(
                        "{model_id}: row {id:?} has {class_count} classes, need at least 2"
                    )));
                }
            }
            check_row(&model_id, &id, &row, class_count)?;
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::invalid(format!("{model_id}: duplicate id {id:?}")));
            }
            ids.push(id);
            values.extend_from_slice(&row);
        }
        if ids.is_empty() {
            return Err(Error::invalid(format!("{model_id}: no rows")));
        }
        Ok(Self {
            model_id,
            class_count,
            ids,
            index,
            values,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&pos| self.row_at(pos))
    }

    fn row_at(&self, pos: usize) -> &[f64] {
        &self.values[pos * self.class_count..(pos + 1) * self.class_count]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(pos, id)| (id.as_str(), self.row_at(pos)))
    }

    /// Row values laid out in `order`, which must be a permutation of this matrix's ids.
    fn aligned(&self, order: &[String]) -> Result<Vec<f64>> {
        if order.len() != self.len() {
            return Err(Error::IdMismatch(format!(
                "{} has {} rows, expected {}",
                self.model_id,
                self.len(),
                order.len()
            )));
        }
        let mut out = Vec::with_capacity(self.values.len());
        for id in order {
            let row = self.row(id).ok_or_else(|| {
                Error::IdMismatch(format!("{} has no row for id {id:?}", self.model_id))
            })?;
            out.extend_from_slice(row);
        }
        Ok(out)
    }
}

fn check_row(model_id: &str, id: &str, row: &[f64], class_count: usize) -> Result<()> {
    if row.len() != class_count {
        return Err(Error::invalid(format!(
            "{model_id}: row {id:?} has {} classes, expected {class_count}",
            row.len()
        )));
    }
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid(format!(
            "{model_id}: row {id:?} has a probability outside [0, 1]"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::invalid(format!(
            "{model_id}: row {id:?} sums to {sum}, not 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ProbabilityLine {
    id: String,
    probs: Vec<f64>,
}

/// Load one model's JSON Lines probability file; the model id is the file stem.
pub fn load_probabilities(path: impl AsRef<Path>) -> Result<ProbabilityMatrix> {
    let path = path.as_ref();
    let lines: Vec<(u64, ProbabilityLine)> = jsonl::read(path)?;
    ProbabilityMatrix::new(jsonl::stem(path), lines.into_iter().map(|(_, l)| (l.id, l.probs)))
        .map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })
}

/// Load every `*.jsonl` file in `dir`, sorted by file name.
pub fn load_probability_dir(dir: impl AsRef<Path>) -> Result<Vec<ProbabilityMatrix>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "jsonl") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!("{}: no .jsonl probability files", dir.display())));
    }
    paths.iter().map(load_probabilities).collect()
}

pub fn write_probabilities(matrix: &ProbabilityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let lines = matrix.rows().map(|(id, row)| ProbabilityLine {
        id: id.to_string(),
        probs: row.to_vec(),
    });
    jsonl::write(path.as_ref(), lines)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = i;
        }
    }
    best
}

/// Member matrices sorted by model id, with the shared id order and aligned values.
struct Aligned<'a> {
    members: Vec<&'a ProbabilityMatrix>,
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
    class_count: usize,
}

fn align<'a>(matrices: impl IntoIterator<Item = &'a ProbabilityMatrix>) -> Result<Aligned<'a>> {
    let mut members: Vec<&ProbabilityMatrix> = matrices.into_iter().collect();
    members.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    let first = *members
        .first()
        .ok_or_else(|| Error::invalid("no probability matrices given"))?;
    let class_count = first.class_count;
    let ids = first.ids.clone();
    let mut values = Vec::with_capacity(members.len());
    for m in &members {
        if m.class_count != class_count {
            return Err(Error::invalid(format!(
                "class count mismatch: {} has {}, {} has {}",
                first.model_id, class_count, m.model_id, m.class_count
            )));
        }
        values.push(m.aligned(&ids)?);
    }
    Ok(Aligned {
        members,
        ids,
        values,
        class_count,
    })
}

/// Per-id, per-class arithmetic mean of the given matrices.
///
/// The result does not depend on the input order: members are summed in
/// model-id order and rows follow the id order of the first member by model id.
pub fn average_probabilities(matrices: &[ProbabilityMatrix]) -> Result<ProbabilityMatrix> {
    let aligned = align(matrices)?;
    let count = aligned.members.len() as f64;
    let mut sums = vec![0.0; aligned.values[0].len()];
    for values in &aligned.values {
        for (s, v) in sums.iter_mut().zip(values) {
            *s += v;
        }
    }
    let model_id = aligned
        .members
        .iter()
        .map(|m| m.model_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let index = aligned
        .ids
        .iter()
        .enumerate()
        .map(|(pos, id)| (id.clone(), pos))
        .collect();
    Ok(ProbabilityMatrix {
        model_id,
        class_count: aligned.class_count,
        ids: aligned.ids,
        index,
        values: sums.into_iter().map(|s| s / count).collect(),
    })
}

/// Argmax class per id; ties go to the lowest class index.
pub fn predict(matrix: &ProbabilityMatrix) -> PredictionVector {
    matrix
        .rows()
        .map(|(id, row)| (id.to_string(), argmax(row)))
        .collect()
}

/// Dev-set metric used to rank ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Accuracy,
    /// Binary F1 with class 1 positive; two-class matrices only.
    F1,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Accuracy => "accuracy",
            Objective::F1 => "f1",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Objective::Accuracy),
            "f1" => Ok(Objective::F1),
            other => Err(Error::invalid(format!(
                "unknown objective {other:?} (allowed: accuracy, f1)"
            ))),
        }
    }
}

impl Objective {
    pub fn score(self, preds: &PredictionVector, golds: &PredictionVector) -> Result<f64> {
        match self {
            Objective::Accuracy => metrics::accuracy(preds, golds),
            Objective::F1 => Ok(metrics::binary_f1(preds, golds, 1)?.value),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    /// Worker threads; `None` uses all available cores.
    pub workers: Option<usize>,
    /// Skip subsets with more members than this.
    pub max_members: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Sorted model ids.
    pub member_ids: Vec<String>,
    pub averaged: ProbabilityMatrix,
    pub dev_score: f64,
    pub objective: Objective,
    pub subsets_evaluated: u64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    mask: u32,
    score: f64,
}

impl Candidate {
    /// `Less` means `self` is the better subset.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.mask.count_ones().cmp(&other.mask.count_ones()))
            .then_with(|| lex_members(self.mask, other.mask))
    }
}

/// Lexicographic order of the ascending member-index lists of two masks.
fn lex_members(a: u32, b: u32) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a, b) {
            (0, 0) => return Ordering::Equal,
            (0, _) => return Ordering::Less,
            (_, 0) => return Ordering::Greater,
            _ => {
                let (ia, ib) = (a.trailing_zeros(), b.trailing_zeros());
                if ia != ib {
                    return ia.cmp(&ib);
                }
                a &= a - 1;
                b &= b - 1;
            }
        }
    }
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.rank(&x) == Ordering::Less { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Scratch state for scoring subsets on one worker.
struct Scorer<'a> {
    values: &'a [Vec<f64>],
    golds: &'a [usize],
    class_count: usize,
    objective: Objective,
    sums: Vec<f64>,
}

impl Scorer<'_> {
    fn score(&mut self, mask: u32) -> f64 {
        let count = mask.count_ones() as f64;
        let c = self.class_count;
        let (mut correct, mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (ex, &gold) in self.golds.iter().enumerate() {
            self.sums.iter_mut().for_each(|s| *s = 0.0);
            let mut bits = mask;
            while bits != 0 {
                let member = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let row = &self.values[member][ex * c..(ex + 1) * c];
                for (s, p) in self.sums.iter_mut().zip(row) {
                    *s += p;
                }
            }
            self.sums.iter_mut().for_each(|s| *s /= count);
            let pred = argmax(&self.sums);
            correct += usize::from(pred == gold);
            match (pred == 1, gold == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        match self.objective {
            Objective::Accuracy => correct as f64 / self.golds.len() as f64,
            Objective::F1 => {
                let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
                let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
                if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                }
            }
        }
    }
}

/// Evaluate every non-empty subset of `matrices` on `golds` and return the best.
pub fn search_best_subset(
    matrices: &[ProbabilityMatrix],
    golds: &PredictionVector,
    objective: Objective,
    options: &SearchOptions,
) -> Result<EnsembleResult> {
    let k = matrices.len();
    if k == 0 || k > MAX_MODELS {
        return Err(Error::invalid(format!(
            "ensemble search needs 1..={MAX_MODELS} models, got {k}"
        )));
    }
    let aligned = align(matrices)?;
    for pair in aligned.members.windows(2) {
        if pair[0].model_id == pair[1].model_id {
            return Err(Error::invalid(format!("duplicate model id {:?}", pair[0].model_id)));
        }
    }
    if objective == Objective::F1 && aligned.class_count != 2 {
        return Err(Error::invalid(format!(
            "f1 objective needs 2 classes, matrices have {}",
            aligned.class_count
        )));
    }
    let gold_labels = aligned
        .ids
        .iter()
        .map(|id| {
            golds
                .get(id)
                .ok_or_else(|| Error::IdMismatch(format!("no gold label for id {id:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(&bad) = gold_labels.iter().find(|&&l| l >= aligned.class_count) {
        return Err(Error::invalid(format!(
            "gold label {bad} out of range for {} classes",
            aligned.class_count
        )));
    }
    let max_members = options.max_members.unwrap_or(k).min(k);
    if max_members == 0 {
        return Err(Error::invalid("max_members must be at least 1"));
    }

    let full: u32 = ((1u64 << k) - 1) as u32;
    let run = || {
        (1..full + 1)
            .into_par_iter()
            .with_min_len(64)
            .filter(|mask| mask.count_ones() as usize <= max_members)
            .fold(
                || {
                    (
                        Scorer {
                            values: &aligned.values,
                            golds: &gold_labels,
                            class_count: aligned.class_count,
                            objective,
                            sums: vec![0.0; aligned.class_count],
                        },
                        None::<Candidate>,
                        0u64,
                    )
                },
                |(mut scorer, best, evaluated), mask| {
                    let score = scorer.score(mask);
                    let best = better(best, Some(Candidate { mask, score }));
                    (scorer, best, evaluated + 1)
                },
            )
            .map(|(_, best, evaluated)| (best, evaluated))
            .reduce(|| (None, 0), |(a, na), (b, nb)| (better(a, b), na + nb))
    };
    let (best, subsets_evaluated) = match options.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?
            .install(run),
        None => run(),
    };
    let best = best.ok_or_else(|| Error::invalid("no subset evaluated"))?;

    let chosen: Vec<ProbabilityMatrix> = (0..k)
        .filter(|i| best.mask & (1 << i) != 0)
        .map(|i| aligned.members[i].clone())
        .collect();
    let member_ids = chosen.iter().map(|m| m.model_id.clone()).collect();
    let averaged = average_probabilities(&chosen)?;
    Ok(EnsembleResult {
        member_ids,
        averaged,
        dev_score: best.score,
        objective,
        subsets_evaluated,
    })
}
