//! Classification metrics, corpus BLEU and Pearson correlation.

mod bleu;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

pub use bleu::{corpus_bleu, tokenize, BleuScore, MAX_ORDER};

/// Ordered `(id, label)` pairs with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictionVector {
    entries: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

impl PredictionVector {
    pub fn new(entries: Vec<(String, usize)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (pos, (id, _)) in entries.iter().enumerate() {
            if index.insert(id.clone(), pos).is_some() {
                return Err(Error::Duplicate(id.clone()));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&pos| self.entries[pos].1)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, usize)> {
        self.entries.iter().map(|(id, label)| (id.as_str(), *label))
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// Keep only the given ids, in the order given. Every id must be present.
    pub fn restrict<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut entries = Vec::new();
        for id in ids {
            let label = self
                .get(id)
                .ok_or_else(|| Error::IdMismatch(format!("no label for id {id:?}")))?;
            entries.push((id.to_string(), label));
        }
        Self::new(entries)
    }

    /// Check that `self` and `other` cover exactly the same ids.
    pub fn check_same_ids(&self, other: &Self) -> Result<()> {
        if let Some(id) = self.ids().find(|id| !other.contains(id)) {
            return Err(Error::IdMismatch(format!("id {id:?} only in predictions")));
        }
        if let Some(id) = other.ids().find(|id| !self.contains(id)) {
            return Err(Error::IdMismatch(format!("id {id:?} only in gold labels")));
        }
        Ok(())
    }
}

impl FromIterator<(String, usize)> for PredictionVector {
    /// Panics on duplicate ids; use [`PredictionVector::new`] for untrusted input.
    fn from_iter<I: IntoIterator<Item = (String, usize)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect()).expect("duplicate id in prediction vector")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionLine {
    id: String,
    label: usize,
}

/// Read predictions from JSON Lines: `{"id": "...", "label": n}`.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionVector> {
    let path = path.as_ref();
    let lines: Vec<(u64, PredictionLine)> = jsonl::read(path)?;
    let mut seen = HashMap::new();
    let mut entries = Vec::with_capacity(lines.len());
    for (line, record) in lines {
        if seen.insert(record.id.clone(), line).is_some() {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: record.id,
            });
        }
        entries.push((record.id, record.label));
    }
    PredictionVector::new(entries)
}

pub fn write_predictions(preds: &PredictionVector, path: impl AsRef<Path>) -> Result<()> {
    let records = preds.iter().map(|(id, label)| PredictionLine {
        id: id.to_string(),
        label,
    });
    jsonl::write(path.as_ref(), records)
}

/// Fraction of ids whose predicted label equals the gold label.
pub fn accuracy(preds: &PredictionVector, golds: &PredictionVector) -> Result<f64> {
    preds.check_same_ids(golds)?;
    if golds.is_empty() {
        return Err(Error::invalid("accuracy over zero examples"));
    }
    let correct = preds
        .iter()
        .filter(|(id, label)| golds.get(id) == Some(*label))
        .count();
    Ok(correct as f64 / golds.len() as f64)
}

/// Binary F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Score {
    pub value: f64,
    pub precision: f64,
    pub recall: f64,
    /// Set when precision + recall is zero, so F1 is undefined and reported as 0.
    pub degenerate: bool,
}

pub fn binary_f1(
    preds: &PredictionVector,
    golds: &PredictionVector,
    positive_label: usize,
) -> Result<F1Score> {
    preds.check_same_ids(golds)?;
    if positive_label > 1 {
        return Err(Error::invalid(format!("positive label {positive_label} is not binary")));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (id, pred) in preds.iter() {
        let gold = golds.get(id).unwrap_or_default();
        if pred > 1 || gold > 1 {
            return Err(Error::invalid(format!("id {id:?}: non-binary label")));
        }
        match (pred == positive_label, gold == positive_label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        log::warn!("F1 undefined: no true positives for label {positive_label}; reporting 0");
        return Ok(F1Score {
            value: 0.0,
            precision,
            recall,
            degenerate: true,
        });
    }
    Ok(F1Score {
        value: 2.0 * precision * recall / (precision + recall),
        precision,
        recall,
        degenerate: false,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::invalid("pearson needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("pearson input contains a non-finite value"));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Predict the most frequent training label for every evaluation id
/// (ties go to the lowest label).
pub fn majority_baseline<'a>(
    train: &PredictionVector,
    eval_ids: impl IntoIterator<Item = &'a str>,
) -> Result<PredictionVector> {
    let mut counts: Vec<usize> = Vec::new();
    for (_, label) in train.iter() {
        if counts.len() <= label {
            counts.resize(label + 1, 0);
        }
        counts[label] += 1;
    }
    let majority = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(label, _)| label)
        .ok_or_else(|| Error::invalid("majority baseline needs training labels"))?;
    PredictionVector::new(eval_ids.into_iter().map(|id| (id.to_string(), majority)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(labels: &[usize]) -> PredictionVector {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (i.to_string(), l))
            .collect()
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&pv(&[0, 1, 1]), &pv(&[0, 1, 1])).unwrap(), 1.0);
        assert_eq!(accuracy(&pv(&[0, 1, 1, 0]), &pv(&[0, 1, 0, 1])).unwrap(), 0.5);
        assert!(matches!(
            accuracy(&pv(&[0, 1]), &pv(&[0, 1, 1])),
            Err(Error::IdMismatch(_))
        ));
    }

    #[test]
    fn f1_all_positive_predictor() {
        let f1 = binary_f1(&pv(&[1, 1, 1, 1]), &pv(&[1, 1, 0, 0]), 1).unwrap();
        assert_abs_diff_eq!(f1.precision, 0.5);
        assert_abs_diff_eq!(f1.recall, 1.0);
        assert_abs_diff_eq!(f1.value, 2.0 / 3.0, epsilon = 1e-15);
        assert!(!f1.degenerate);
    }

    #[test]
    fn f1_perfect_and_degenerate() {
        assert_eq!(binary_f1(&pv(&[0, 1]), &pv(&[0, 1]), 1).unwrap().value, 1.0);
        let f1 = binary_f1(&pv(&[0, 0]), &pv(&[0, 0]), 1).unwrap();
        assert_eq!(f1.value, 0.0);
        assert!(f1.degenerate);
        assert!(binary_f1(&pv(&[2, 0]), &pv(&[0, 0]), 1).is_err());
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert_abs_diff_eq!(pearson(&xs, &ys).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_abs_diff_eq!(pearson(&xs, &neg).unwrap(), -1.0, epsilon = 1e-12);
        // cov = 0.5, var_x = var_y = 1 (sample): r = 0.5
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance("xs"))));
        assert!(matches!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::ZeroVariance("ys"))));
    }

    #[test]
    fn majority_ties_go_low() {
        let train = pv(&[1, 0, 1, 0]);
        let preds = majority_baseline(&train, ["a", "b"]).unwrap();
        assert_eq!(preds.get("a"), Some(0));
        let train = pv(&[2, 2, 0]);
        assert_eq!(majority_baseline(&train, ["a"]).unwrap().get("a"), Some(2));
    }

    #[test]
    fn duplicate_prediction_ids_rejected() {
        assert!(PredictionVector::new(vec![("a".into(), 0), ("a".into(), 1)]).is_err());
    }
}
