//! Rerank generated explanations with a multiple-choice scorer.
//!
//! Outputs of two or three generation systems become the options of a
//! choice instance per statement. An external scorer rates every option,
//! the best-rated option is kept, and the selections are summarised by
//! per-system share, the mean human rating of the chosen texts, and the
//! mean of the per-example best human rating (the oracle upper bound).

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::dataset::{ChoiceExample, Dataset, GenerationExample};
use crate::error::{Error, Result};
use crate::jsonl;

pub const MIN_SYSTEMS: usize = 2;
pub const MAX_SYSTEMS: usize = 3;
pub const MAX_HUMAN_SCORE: f64 = 3.0;

/// One generation system's explanation per example id.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemOutput {
    system_id: String,
    texts: HashMap<String, String>,
}

impl SystemOutput {
    pub fn new(
        system_id: impl Into<String>,
        texts: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let system_id = system_id.into();
        let mut map = HashMap::new();
        for (id, text) in texts {
            if text.trim().is_empty() {
                return Err(Error::invalid(format!("{system_id}: empty text for id {id:?}")));
            }
            if map.insert(id.clone(), text).is_some() {
                return Err(Error::invalid(format!("{system_id}: duplicate id {id:?}")));
            }
        }
        Ok(Self {
            system_id,
            texts: map,
        })
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn text(&self, id: &str) -> Option<&str> {
        self.texts.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

#[derive(Deserialize)]
struct SystemLine {
    id: String,
    text: String,
}

/// Load a system's `{"id", "text"}` lines; the system id is the file stem.
/// Returns the ids in file order alongside the output.
pub fn load_system_output(path: impl AsRef<Path>) -> Result<(SystemOutput, Vec<String>)> {
    let path = path.as_ref();
    let lines = jsonl::read::<SystemLine>(path)?;
    let order = lines.iter().map(|(_, l)| l.id.clone()).collect();
    let output = SystemOutput::new(jsonl::stem(path), lines.into_iter().map(|(_, l)| (l.id, l.text)))
        .map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    Ok((output, order))
}

/// Whether a larger or a smaller candidate score is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Direction {
    #[serde(rename = "higher")]
    HigherBetter,
    #[serde(rename = "lower")]
    LowerBetter,
}

/// Scorer output: one score per system for each example.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScores {
    rows: HashMap<String, Vec<f64>>,
    direction: Direction,
}

impl CandidateScores {
    pub fn new(
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
        direction: Direction,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        let mut width = None;
        for (id, row) in rows {
            if row.iter().any(|s| !s.is_finite()) {
                return Err(Error::invalid(format!("score row {id:?} has a non-finite entry")));
            }
            if *width.get_or_insert(row.len()) != row.len() {
                return Err(Error::invalid(format!("score row {id:?} has width {}", row.len())));
            }
            if map.insert(id.clone(), row).is_some() {
                return Err(Error::invalid(format!("duplicate score row {id:?}")));
            }
        }
        Ok(Self {
            rows: map,
            direction,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.rows.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Deserialize)]
struct ScoreLine {
    id: String,
    scores: Vec<f64>,
    direction: Direction,
}

/// Load `{"id", "scores", "direction"}` lines; the direction must not change within the file.
pub fn load_candidate_scores(path: impl AsRef<Path>) -> Result<CandidateScores> {
    let path = path.as_ref();
    let lines = jsonl::read::<ScoreLine>(path)?;
    let direction = match lines.first() {
        Some((_, l)) => l.direction,
        None => {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                message: "no score rows".into(),
            })
        }
    };
    if let Some((line, _)) = lines.iter().find(|(_, l)| l.direction != direction) {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: *line,
            message: "direction differs from the first row".into(),
        });
    }
    CandidateScores::new(lines.into_iter().map(|(_, l)| (l.id, l.scores)), direction).map_err(|e| {
        Error::Malformed {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        }
    })
}

/// Human ratings on a 0-3 scale keyed by `(id, system)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanScoreTable {
    rows: HashMap<(String, String), f64>,
}

impl HumanScoreTable {
    pub fn new(rows: impl IntoIterator<Item = (String, String, f64)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (id, system, score) in rows {
            if !(0.0..=MAX_HUMAN_SCORE).contains(&score) {
                return Err(Error::invalid(format!(
                    "human score {score} for ({id:?}, {system:?}) outside [0, 3]"
                )));
            }
            if map.insert((id.clone(), system.clone()), score).is_some() {
                return Err(Error::invalid(format!("duplicate human score for ({id:?}, {system:?})")));
            }
        }
        Ok(Self { rows: map })
    }

    pub fn get(&self, id: &str, system: &str) -> Option<f64> {
        self.rows.get(&(id.to_string(), system.to_string())).copied()
    }

    fn require(&self, id: &str, system: &str) -> Result<f64> {
        self.get(id, system).ok_or_else(|| Error::MissingScore {
            id: id.to_string(),
            system: system.to_string(),
        })
    }
}

/// Load a `id,system,score` CSV.
pub fn load_human_scores(path: impl AsRef<Path>) -> Result<HumanScoreTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let malformed = |line: u64, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = reader.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["id", "system", "score"] {
        return Err(malformed(1, "expected header \"id,system,score\"".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            malformed(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let score: f64 = record[2]
            .parse()
            .map_err(|_| malformed(line, format!("score {:?} is not a number", &record[2])))?;
        rows.push((record[0].to_string(), record[1].to_string(), score));
    }
    HumanScoreTable::new(rows).map_err(|e| malformed(0, e.to_string()))
}

/// Choice instances built from system outputs, with the system order they follow.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceInstances {
    pub dataset: Dataset<ChoiceExample>,
    pub systems: Vec<String>,
}

/// Build one unlabeled choice instance per statement, options in system order.
///
/// With two systems the third option is an empty placeholder that can never
/// be selected.
pub fn build_choice_instances(
    statements: &Dataset<GenerationExample>,
    systems: &[SystemOutput],
) -> Result<ChoiceInstances> {
    build_from_statements(
        statements.iter().map(|e| (e.id.as_str(), e.statement.as_str())),
        systems,
    )
}

/// Like [`build_choice_instances`] for bare `(id, statement)` pairs.
pub fn build_from_statements<'a>(
    statements: impl IntoIterator<Item = (&'a str, &'a str)>,
    systems: &[SystemOutput],
) -> Result<ChoiceInstances> {
    if !(MIN_SYSTEMS..=MAX_SYSTEMS).contains(&systems.len()) {
        return Err(Error::invalid(format!(
            "reranking needs {MIN_SYSTEMS} or {MAX_SYSTEMS} systems, got {}",
            systems.len()
        )));
    }
    let mut examples = Vec::new();
    for (id, statement) in statements {
        let mut options: [String; 3] = Default::default();
        for (slot, system) in options.iter_mut().zip(systems) {
            *slot = system
                .text(id)
                .ok_or_else(|| {
                    Error::invalid(format!("system {:?} has no output for id {id:?}", system.system_id))
                })?
                .to_string();
        }
        examples.push(ChoiceExample {
            id: id.to_string(),
            statement: statement.to_string(),
            options,
            label: None,
        });
    }
    Ok(ChoiceInstances {
        dataset: Dataset::new(examples)?,
        systems: systems.iter().map(|s| s.system_id.clone()).collect(),
    })
}

/// The option kept for one example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub id: String,
    pub system_index: usize,
    pub system_id: String,
    pub text: String,
}

fn best_index(row: &[f64], direction: Direction) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        let wins = match direction {
            Direction::HigherBetter => v > row[best],
            Direction::LowerBetter => v < row[best],
        };
        if wins {
            best = i;
        }
    }
    best
}

/// Per instance, the option with the best score; ties go to the lowest index.
pub fn select_best(instances: &ChoiceInstances, scores: &CandidateScores) -> Result<Vec<Selection>> {
    let n = instances.systems.len();
    if scores.len() != instances.dataset.len() {
        return Err(Error::IdMismatch(format!(
            "{} score rows for {} instances",
            scores.len(),
            instances.dataset.len()
        )));
    }
    let sentinel = match scores.direction {
        Direction::HigherBetter => f64::NEG_INFINITY,
        Direction::LowerBetter => f64::INFINITY,
    };
    let mut selections = Vec::with_capacity(instances.dataset.len());
    for example in &instances.dataset {
        let row = scores
            .row(&example.id)
            .ok_or_else(|| Error::IdMismatch(format!("no scores for id {:?}", example.id)))?;
        if row.len() != n {
            return Err(Error::invalid(format!(
                "id {:?}: {} scores for {n} systems",
                example.id,
                row.len()
            )));
        }
        let mut padded = [sentinel; MAX_SYSTEMS];
        padded[..n].copy_from_slice(row);
        let system_index = best_index(&padded, scores.direction);
        selections.push(Selection {
            id: example.id.clone(),
            system_index,
            system_id: instances.systems[system_index].clone(),
            text: example.options[system_index].clone(),
        });
    }
    Ok(selections)
}

/// Fraction of selections falling on each of the `system_count` systems.
pub fn selection_shares(selections: &[Selection], system_count: usize) -> Result<Vec<f64>> {
    if selections.is_empty() {
        return Err(Error::invalid("selection shares of zero selections"));
    }
    let mut counts = vec![0usize; system_count];
    for s in selections {
        *counts.get_mut(s.system_index).ok_or_else(|| {
            Error::invalid(format!("selection for {:?} names system {}", s.id, s.system_index))
        })? += 1;
    }
    let total = selections.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Mean human rating of the selected explanations.
pub fn recompute_human_score(selections: &[Selection], human: &HumanScoreTable) -> Result<f64> {
    if selections.is_empty() {
        return Err(Error::invalid("human score of zero selections"));
    }
    let mut total = 0.0;
    for s in selections {
        total += human.require(&s.id, &s.system_id)?;
    }
    Ok(total / selections.len() as f64)
}

/// Mean over ids of the best human rating any system achieved.
pub fn oracle_upper_bound<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    systems: &[String],
    human: &HumanScoreTable,
) -> Result<f64> {
    if systems.is_empty() {
        return Err(Error::invalid("upper bound over zero systems"));
    }
    let (mut total, mut count) = (0.0, 0usize);
    for id in ids {
        let mut best = f64::NEG_INFINITY;
        for system in systems {
            best = best.max(human.require(id, system)?);
        }
        total += best;
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("upper bound over zero examples"));
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(name: &str, texts: &[(&str, &str)]) -> SystemOutput {
        SystemOutput::new(name, texts.iter().map(|(i, t)| (i.to_string(), t.to_string()))).unwrap()
    }

    fn one_statement() -> Dataset<GenerationExample> {
        Dataset::new(vec![GenerationExample {
            id: "1".into(),
            statement: "He put an elephant in the fridge.".into(),
            references: vec!["An elephant is too big.".into()],
        }])
        .unwrap()
    }

    #[test]
    fn options_follow_system_order() {
        let systems = [
            system("a", &[("1", "text a")]),
            system("b", &[("1", "text b")]),
            system("c", &[("1", "text c")]),
        ];
        let inst = build_choice_instances(&one_statement(), &systems).unwrap();
        assert_eq!(inst.dataset.get("1").unwrap().options, ["text a", "text b", "text c"]);
        assert_eq!(inst.systems, ["a", "b", "c"]);
        assert_eq!(inst.dataset.get("1").unwrap().label, None);
    }

    #[test]
    fn missing_system_output_is_named() {
        let systems = [system("a", &[("1", "x")]), system("b", &[("2", "y")])];
        let err = build_choice_instances(&one_statement(), &systems).unwrap_err().to_string();
        assert!(err.contains("\"b\"") && err.contains("\"1\""), "{err}");
        assert!(build_choice_instances(&one_statement(), &systems[..1]).is_err());
    }

    fn scored(row: Vec<f64>, direction: Direction) -> usize {
        let systems = [
            system("a", &[("1", "x")]),
            system("b", &[("1", "y")]),
            system("c", &[("1", "z")]),
        ];
        let inst = build_choice_instances(&one_statement(), &systems[..row.len()]).unwrap();
        let scores = CandidateScores::new([("1".to_string(), row)], direction).unwrap();
        select_best(&inst, &scores).unwrap()[0].system_index
    }

    #[test]
    fn selection_by_direction() {
        assert_eq!(scored(vec![0.1, 0.7, 0.2], Direction::HigherBetter), 1);
        assert_eq!(scored(vec![0.1, 0.7, 0.2], Direction::LowerBetter), 0);
        assert_eq!(scored(vec![0.5, 0.5, 0.1], Direction::HigherBetter), 0);
        // two systems: the placeholder is never chosen
        assert_eq!(scored(vec![-5.0, -9.0], Direction::HigherBetter), 0);
        assert_eq!(scored(vec![50.0, 90.0], Direction::LowerBetter), 0);
    }

    #[test]
    fn shares_count_selections() {
        let sel = |i: usize| Selection {
            id: String::new(),
            system_index: i,
            system_id: String::new(),
            text: String::new(),
        };
        let mut selections: Vec<Selection> = (0..500).map(|_| sel(0)).collect();
        selections.extend((0..316).map(|_| sel(1)));
        selections.extend((0..184).map(|_| sel(2)));
        assert_eq!(selection_shares(&selections, 3).unwrap(), [0.5, 0.316, 0.184]);
        assert_eq!(selection_shares(&selections[..10], 3).unwrap(), [1.0, 0.0, 0.0]);
        assert!(selection_shares(&[], 3).is_err());
    }

    #[test]
    fn human_scores_and_upper_bound() {
        let human = HumanScoreTable::new([
            ("x".to_string(), "a".to_string(), 2.0),
            ("x".to_string(), "b".to_string(), 0.0),
            ("x".to_string(), "c".to_string(), 1.0),
            ("y".to_string(), "a".to_string(), 0.0),
            ("y".to_string(), "b".to_string(), 3.0),
            ("y".to_string(), "c".to_string(), 1.0),
        ])
        .unwrap();
        let systems: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(oracle_upper_bound(["x", "y"], &systems, &human).unwrap(), 2.5);
        assert_eq!(oracle_upper_bound(["x", "y"], &systems[..1], &human).unwrap(), 1.0);

        let pick = |id: &str, s: &str| Selection {
            id: id.into(),
            system_index: 0,
            system_id: s.into(),
            text: String::new(),
        };
        assert_eq!(recompute_human_score(&[pick("x", "c"), pick("y", "c")], &human).unwrap(), 1.0);
        let err = recompute_human_score(&[pick("z", "a")], &human).unwrap_err();
        assert!(matches!(err, Error::MissingScore { .. }));
    }

    #[test]
    fn human_scores_out_of_range() {
        assert!(HumanScoreTable::new([("x".to_string(), "a".to_string(), 3.5)]).is_err());
    }
}
