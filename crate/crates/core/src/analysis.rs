//! Baselines, BLEU-vs-human correlation and error listings.

use std::path::Path;

use crate::dataset::{Dataset, GenerationExample, Record, TextFields};
use crate::error::{Error, Result};
use crate::metrics::{self, BleuScore, PredictionVector};
use crate::report::{fmt_f64, Table};

/// BLEU of copying each statement verbatim as its explanation.
pub fn copy_source_baseline(data: &Dataset<GenerationExample>) -> Result<BleuScore> {
    if data.is_empty() {
        return Err(Error::invalid("copy-source baseline of an empty dataset"));
    }
    let hyps: Vec<&str> = data.iter().map(|e| e.statement.as_str()).collect();
    let refs: Vec<Vec<&str>> = data
        .iter()
        .map(|e| e.references.iter().map(String::as_str).collect())
        .collect();
    metrics::corpus_bleu(&hyps, &refs)
}

pub fn bleu_table(title: &str, bleu: &BleuScore) -> Table {
    let mut t = Table::new(title, &["metric", "value"]);
    t.row(["bleu".to_string(), fmt_f64(bleu.score)]);
    for (n, p) in bleu.precisions.iter().enumerate() {
        t.row([format!("precision_{}", n + 1), fmt_f64(*p)]);
    }
    t.row(["brevity_penalty".to_string(), fmt_f64(bleu.brevity_penalty)]);
    t.row(["hyp_length".to_string(), bleu.hyp_length.to_string()]);
    t.row(["ref_length".to_string(), bleu.ref_length.to_string()]);
    t
}

/// One system on a shared-task leaderboard.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub system_id: String,
    pub bleu: f64,
    pub human: f64,
}

/// Read a `system,bleu,human` CSV.
pub fn load_leaderboard(path: impl AsRef<Path>) -> Result<Vec<LeaderboardRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let malformed = |line: u64, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["system", "bleu", "human"] {
        return Err(malformed(1, "expected header \"system,bleu,human\"".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| malformed(e.position().map(|p| p.line()).unwrap_or(0), e.to_string()))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let number = |i: usize| -> Result<f64> {
            match record[i].parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(malformed(line, format!("{:?} is not a finite number", &record[i]))),
            }
        };
        rows.push(LeaderboardRow {
            system_id: record[0].to_string(),
            bleu: number(1)?,
            human: number(2)?,
        });
    }
    Ok(rows)
}

/// Pearson r over some subset of the leaderboard.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEntry {
    /// `None` for the whole leaderboard.
    pub top_k: Option<usize>,
    pub systems: usize,
    /// `Err` carries the reason r is undefined (zero variance).
    pub r: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub overall: CorrelationEntry,
    pub top_k: Vec<CorrelationEntry>,
}

impl CorrelationReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new("BLEU vs human correlation", &["subset", "systems", "pearson_r"]);
        for entry in std::iter::once(&self.overall).chain(&self.top_k) {
            let subset = match entry.top_k {
                None => "all".to_string(),
                Some(k) => format!("top-{k}"),
            };
            let r = match &entry.r {
                Ok(r) => fmt_f64(*r),
                Err(reason) => format!("undefined ({reason})"),
            };
            t.row([subset, entry.systems.to_string(), r]);
        }
        t
    }
}

fn correlate(rows: &[&LeaderboardRow], top_k: Option<usize>) -> CorrelationEntry {
    let bleu: Vec<f64> = rows.iter().map(|r| r.bleu).collect();
    let human: Vec<f64> = rows.iter().map(|r| r.human).collect();
    CorrelationEntry {
        top_k,
        systems: rows.len(),
        r: metrics::pearson(&bleu, &human).map_err(|e| e.to_string()),
    }
}

/// Pearson r between BLEU and human score overall and over the `k` systems
/// with the highest BLEU, for each requested `k`.
pub fn correlation_report(rows: &[LeaderboardRow], top_ks: &[usize]) -> Result<CorrelationReport> {
    if rows.len() < 2 {
        return Err(Error::invalid("correlation needs at least two leaderboard rows"));
    }
    if let Some(&k) = top_ks.iter().find(|&&k| k < 2 || k > rows.len()) {
        return Err(Error::invalid(format!(
            "top-k {k} outside 2..={} for this leaderboard",
            rows.len()
        )));
    }
    let mut ranked: Vec<&LeaderboardRow> = rows.iter().collect();
    ranked.sort_by(|a, b| b.bleu.total_cmp(&a.bleu).then_with(|| a.system_id.cmp(&b.system_id)));

    let all: Vec<&LeaderboardRow> = rows.iter().collect();
    Ok(CorrelationReport {
        overall: correlate(&all, None),
        top_k: top_ks
            .iter()
            .map(|&k| correlate(&ranked[..k], Some(k)))
            .collect(),
    })
}

/// A misclassified example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorRecord {
    pub id: String,
    pub inputs: Vec<String>,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBreakdown {
    pub records: Vec<ErrorRecord>,
    pub total: usize,
}

impl ErrorBreakdown {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.records.len() as f64 / self.total as f64
        }
    }

    pub fn table(&self) -> Table {
        let width = self.records.iter().map(|r| r.inputs.len()).max().unwrap_or(0);
        let mut header = vec!["id".to_string()];
        header.extend((0..width).map(|i| format!("text{i}")));
        header.extend(["predicted".to_string(), "gold".to_string()]);
        let mut t = Table {
            title: "Errors".into(),
            header,
            ..Table::default()
        };
        t.note(format!(
            "{} of {} examples misclassified ({:.2}%)",
            self.records.len(),
            self.total,
            100.0 * self.rate()
        ));
        for r in &self.records {
            let mut cells = vec![r.id.clone()];
            cells.extend(r.inputs.iter().cloned());
            cells.resize(width + 1, String::new());
            cells.extend([r.predicted.to_string(), r.gold.to_string()]);
            t.row(cells);
        }
        t
    }
}

/// Every example whose prediction differs from its gold label, in dataset order.
pub fn error_breakdown<T: Record + TextFields>(
    preds: &PredictionVector,
    golds: &PredictionVector,
    examples: &Dataset<T>,
) -> Result<ErrorBreakdown> {
    preds.check_same_ids(golds)?;
    if examples.len() != golds.len() {
        return Err(Error::IdMismatch(format!(
            "{} examples for {} labels",
            examples.len(),
            golds.len()
        )));
    }
    let mut records = Vec::new();
    for example in examples {
        let id = example.id();
        let gold = golds
            .get(id)
            .ok_or_else(|| Error::IdMismatch(format!("no label for example {id:?}")))?;
        let predicted = preds.get(id).unwrap_or(gold);
        if predicted != gold {
            records.push(ErrorRecord {
                id: id.to_string(),
                inputs: example.text_fields().into_iter().map(str::to_string).collect(),
                predicted,
                gold,
            });
        }
    }
    Ok(ErrorBreakdown {
        records,
        total: examples.len(),
    })
}
