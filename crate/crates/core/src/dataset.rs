//! Record shapes for the three subtasks and their CSV formats.
//!
//! All files are UTF-8, comma-delimited with double-quote quoting and a
//! mandatory header row:
//!
//! | file               | header                                     |
//! | ------------------ | ------------------------------------------ |
//! | pairs data         | `id,sent0,sent1`                           |
//! | choices data       | `id,statement,option0,option1,option2`     |
//! | generation data    | `id,statement`                             |
//! | references         | `id,ref0,ref1,ref2` (`ref1`/`ref2` may be empty) |
//! | answers (A and B)  | `id,label`                                 |
//!
//! Labels are 0-based. Text fields are trimmed on load.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::PredictionVector;

pub const PAIRS_HEADER: [&str; 3] = ["id", "sent0", "sent1"];
pub const CHOICES_HEADER: [&str; 5] = ["id", "statement", "option0", "option1", "option2"];
pub const GENERATION_HEADER: [&str; 2] = ["id", "statement"];
pub const REFERENCES_HEADER: [&str; 4] = ["id", "ref0", "ref1", "ref2"];
pub const ANSWERS_HEADER: [&str; 2] = ["id", "label"];

/// Anything stored in a [`Dataset`] is addressed by a string id.
pub trait Record {
    fn id(&self) -> &str;
}

/// A record carrying an optional class label.
pub trait Labeled: Record {
    /// Number of classes the label ranges over.
    const CLASSES: usize;

    fn label(&self) -> Option<usize>;
    fn set_label(&mut self, label: usize);
}

/// The text fields of a record, in column order. Used by error reports.
pub trait TextFields {
    fn text_fields(&self) -> Vec<&str>;
}

/// Subtask A: two statements, the label picks the one against common sense.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub id: String,
    pub sent0: String,
    pub sent1: String,
    pub label: Option<usize>,
}

/// Subtask B: a nonsensical statement and three candidate explanations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceExample {
    pub id: String,
    pub statement: String,
    pub options: [String; 3],
    pub label: Option<usize>,
}

/// Subtask C: a nonsensical statement and 1-3 reference explanations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationExample {
    pub id: String,
    pub statement: String,
    pub references: Vec<String>,
}

impl Record for PairExample {
    fn id(&self) -> &str {
        &self.id
    }
}

impl Record for ChoiceExample {
    fn id(&self) -> &str {
        &self.id
    }
}

impl Record for GenerationExample {
    fn id(&self) -> &str {
        &self.id
    }
}

impl Labeled for PairExample {
    const CLASSES: usize = 2;

    fn label(&self) -> Option<usize> {
        self.label
    }

    fn set_label(&mut self, label: usize) {
        self.label = Some(label);
    }
}

impl Labeled for ChoiceExample {
    const CLASSES: usize = 3;

    fn label(&self) -> Option<usize> {
        self.label
    }

    fn set_label(&mut self, label: usize) {
        self.label = Some(label);
    }
}

impl TextFields for PairExample {
    fn text_fields(&self) -> Vec<&str> {
        vec![&self.sent0, &self.sent1]
    }
}

impl TextFields for ChoiceExample {
    fn text_fields(&self) -> Vec<&str> {
        let mut fields = vec![self.statement.as_str()];
        fields.extend(self.options.iter().map(String::as_str));
        fields
    }
}

impl TextFields for GenerationExample {
    fn text_fields(&self) -> Vec<&str> {
        vec![&self.statement]
    }
}

/// An ordered collection of records with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset<T> {
    examples: Vec<T>,
    index: HashMap<String, usize>,
}

impl<T> Default for Dataset<T> {
    fn default() -> Self {
        Self {
            examples: Vec::new(),
            index: HashMap::new(),
        }
    }
}

impl<T: Record> Dataset<T> {
    pub fn new(examples: Vec<T>) -> Result<Self> {
        let mut index = HashMap::with_capacity(examples.len());
        for (pos, example) in examples.iter().enumerate() {
            if index.insert(example.id().to_string(), pos).is_some() {
                return Err(Error::Duplicate(example.id().to_string()));
            }
        }
        Ok(Self { examples, index })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&T> {
        self.index.get(id).map(|&pos| &self.examples[pos])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.examples.iter()
    }

    pub fn examples(&self) -> &[T] {
        &self.examples
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(Record::id)
    }

    pub fn into_examples(self) -> Vec<T> {
        self.examples
    }
}

impl<T: Labeled> Dataset<T> {
    /// Gold labels as a prediction vector, in dataset order.
    pub fn labels(&self) -> Result<PredictionVector> {
        let mut entries = Vec::with_capacity(self.len());
        for example in &self.examples {
            let label = example
                .label()
                .ok_or_else(|| Error::Unlabeled(example.id().to_string()))?;
            entries.push((example.id().to_string(), label));
        }
        PredictionVector::new(entries)
    }
}

impl<'a, T> IntoIterator for &'a Dataset<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// Fraction of examples carrying each label. Every example must be labeled.
pub fn label_distribution<T: Labeled>(dataset: &Dataset<T>) -> Result<BTreeMap<usize, f64>> {
    if dataset.is_empty() {
        return Err(Error::invalid("label distribution of an empty dataset"));
    }
    let mut counts = vec![0usize; T::CLASSES];
    for example in dataset {
        let label = example
            .label()
            .ok_or_else(|| Error::Unlabeled(example.id().to_string()))?;
        counts[label] += 1;
    }
    let total = dataset.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(label, count)| (label, count as f64 / total))
        .collect())
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .collect::<Vec<_>>();
    if found != header {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {:?}, found {:?}", header.join(","), found.join(",")),
        });
    }
    Ok(reader)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        message: err.to_string(),
    }
}

/// Iterate `(line, fields)` over the data rows of a CSV file.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = open_csv(path, header)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn require_text(path: &Path, line: u64, column: &str, value: &str) -> Result<()> {
    if value.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("empty `{column}` field"),
        });
    }
    Ok(())
}

fn collect_dataset<T: Record>(path: &Path, rows: Vec<(u64, T)>) -> Result<Dataset<T>> {
    let mut seen = HashMap::with_capacity(rows.len());
    let mut examples = Vec::with_capacity(rows.len());
    for (line, example) in rows {
        if seen.insert(example.id().to_string(), line).is_some() {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: example.id().to_string(),
            });
        }
        examples.push(example);
    }
    Dataset::new(examples)
}

/// Read an `id,label` answers file, checking every label is below `classes`.
pub fn load_answers(path: impl AsRef<Path>, classes: usize) -> Result<PredictionVector> {
    let path = path.as_ref();
    let mut seen = HashMap::new();
    let mut entries = Vec::new();
    for (line, fields) in read_rows(path, &ANSWERS_HEADER)? {
        let id = fields[0].clone();
        require_text(path, line, "id", &id)?;
        let label: i64 = fields[1].parse().map_err(|_| Error::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("id {id:?}: label {:?} is not an integer", fields[1]),
        })?;
        if label < 0 || label as usize >= classes {
            return Err(Error::InvalidLabel {
                path: path.to_path_buf(),
                line,
                id,
                label,
                classes,
            });
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id,
            });
        }
        entries.push((id, label as usize));
    }
    PredictionVector::new(entries)
}

fn attach_answers<T: Labeled>(dataset: &mut Dataset<T>, answers_path: &Path) -> Result<()> {
    let answers = load_answers(answers_path, T::CLASSES)?;
    // line numbers for error messages: header is line 1
    for (row, (id, label)) in answers.iter().enumerate() {
        let pos = dataset.position(id).ok_or_else(|| Error::UnknownId {
            path: answers_path.to_path_buf(),
            line: row as u64 + 2,
            id: id.to_string(),
        })?;
        dataset.examples[pos].set_label(label);
    }
    if let Some(missing) = dataset.examples.iter().find(|e| e.label().is_none()) {
        return Err(Error::MissingId {
            path: answers_path.to_path_buf(),
            id: missing.id().to_string(),
        });
    }
    Ok(())
}

/// Load subtask-A statement pairs, optionally joined with their answers.
pub fn load_pairs(
    path: impl AsRef<Path>,
    answers_path: Option<&Path>,
) -> Result<Dataset<PairExample>> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for (line, mut fields) in read_rows(path, &PAIRS_HEADER)? {
        require_text(path, line, "id", &fields[0])?;
        require_text(path, line, "sent0", &fields[1])?;
        require_text(path, line, "sent1", &fields[2])?;
        let sent1 = fields.pop().unwrap_or_default();
        let sent0 = fields.pop().unwrap_or_default();
        let id = fields.pop().unwrap_or_default();
        rows.push((
            line,
            PairExample {
                id,
                sent0,
                sent1,
                label: None,
            },
        ));
    }
    let mut dataset = collect_dataset(path, rows)?;
    if let Some(answers) = answers_path {
        attach_answers(&mut dataset, answers)?;
    }
    Ok(dataset)
}

/// Load subtask-B statements with three options, optionally joined with answers.
pub fn load_choices(
    path: impl AsRef<Path>,
    answers_path: Option<&Path>,
) -> Result<Dataset<ChoiceExample>> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for (line, fields) in read_rows(path, &CHOICES_HEADER)? {
        for (column, value) in CHOICES_HEADER.iter().zip(&fields) {
            require_text(path, line, column, value)?;
        }
        let mut fields = fields.into_iter();
        let mut next = || fields.next().unwrap_or_default();
        rows.push((
            line,
            ChoiceExample {
                id: next(),
                statement: next(),
                options: [next(), next(), next()],
                label: None,
            },
        ));
    }
    let mut dataset = collect_dataset(path, rows)?;
    if let Some(answers) = answers_path {
        attach_answers(&mut dataset, answers)?;
    }
    Ok(dataset)
}

/// Load subtask-C statements joined by id to their references.
///
/// Empty reference fields are dropped; an id left with no reference is an
/// error, as is a reference row whose id has no statement.
pub fn load_generation(
    path: impl AsRef<Path>,
    refs_path: impl AsRef<Path>,
) -> Result<Dataset<GenerationExample>> {
    let path = path.as_ref();
    let refs_path = refs_path.as_ref();

    let mut rows = Vec::new();
    for (line, fields) in read_rows(path, &GENERATION_HEADER)? {
        require_text(path, line, "id", &fields[0])?;
        require_text(path, line, "statement", &fields[1])?;
        let mut fields = fields.into_iter();
        rows.push((
            line,
            GenerationExample {
                id: fields.next().unwrap_or_default(),
                statement: fields.next().unwrap_or_default(),
                references: Vec::new(),
            },
        ));
    }
    let mut dataset = collect_dataset(path, rows)?;

    let mut seen = HashMap::new();
    for (line, fields) in read_rows(refs_path, &REFERENCES_HEADER)? {
        let id = &fields[0];
        let pos = dataset.position(id).ok_or_else(|| Error::UnknownId {
            path: refs_path.to_path_buf(),
            line,
            id: id.clone(),
        })?;
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::DuplicateId {
                path: refs_path.to_path_buf(),
                line,
                id: id.clone(),
            });
        }
        let references: Vec<String> = fields[1..].iter().filter(|r| !r.is_empty()).cloned().collect();
        if references.is_empty() {
            return Err(Error::Malformed {
                path: refs_path.to_path_buf(),
                line,
                message: format!("id {id:?} has no non-empty reference"),
            });
        }
        dataset.examples[pos].references = references;
    }
    if let Some(missing) = dataset.examples.iter().find(|e| e.references.is_empty()) {
        return Err(Error::MissingId {
            path: refs_path.to_path_buf(),
            id: missing.id.clone(),
        });
    }
    Ok(dataset)
}

fn create_csv(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(header)
        .map_err(|e| csv_error(path, e))?;
    Ok(writer)
}

fn finish_csv(path: &Path, mut writer: csv::Writer<File>) -> Result<()> {
    writer.flush().map_err(|e| Error::io(path, e))
}

fn write_answers<T: Labeled>(dataset: &Dataset<T>, path: &Path) -> Result<()> {
    let mut writer = create_csv(path, &ANSWERS_HEADER)?;
    for example in dataset {
        let label = example
            .label()
            .ok_or_else(|| Error::Unlabeled(example.id().to_string()))?;
        writer
            .write_record([example.id(), &label.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    finish_csv(path, writer)
}

/// Write pairs in the canonical format; answers are written when a path is given.
pub fn write_pairs(
    dataset: &Dataset<PairExample>,
    path: impl AsRef<Path>,
    answers_path: Option<&Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = create_csv(path, &PAIRS_HEADER)?;
    for e in dataset {
        writer
            .write_record([&e.id, &e.sent0, &e.sent1])
            .map_err(|err| csv_error(path, err))?;
    }
    finish_csv(path, writer)?;
    if let Some(answers) = answers_path {
        write_answers(dataset, answers)?;
    }
    Ok(())
}

pub fn write_choices(
    dataset: &Dataset<ChoiceExample>,
    path: impl AsRef<Path>,
    answers_path: Option<&Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = create_csv(path, &CHOICES_HEADER)?;
    for e in dataset {
        let [o0, o1, o2] = &e.options;
        writer
            .write_record([&e.id, &e.statement, o0, o1, o2])
            .map_err(|err| csv_error(path, err))?;
    }
    finish_csv(path, writer)?;
    if let Some(answers) = answers_path {
        write_answers(dataset, answers)?;
    }
    Ok(())
}

pub fn write_generation(
    dataset: &Dataset<GenerationExample>,
    path: impl AsRef<Path>,
    refs_path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let refs_path = refs_path.as_ref();
    let mut writer = create_csv(path, &GENERATION_HEADER)?;
    for e in dataset {
        writer
            .write_record([&e.id, &e.statement])
            .map_err(|err| csv_error(path, err))?;
    }
    finish_csv(path, writer)?;

    let mut writer = create_csv(refs_path, &REFERENCES_HEADER)?;
    for e in dataset {
        if e.references.is_empty() || e.references.len() > 3 {
            return Err(Error::invalid(format!(
                "example {:?} has {} references, expected 1-3",
                e.id,
                e.references.len()
            )));
        }
        let mut record = vec![e.id.as_str()];
        record.extend(e.references.iter().map(String::as_str));
        record.resize(4, "");
        writer
            .write_record(record)
            .map_err(|err| csv_error(refs_path, err))?;
    }
    finish_csv(refs_path, writer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        path
    }

    #[test]
    fn pairs_keep_row_order() {
        let dir = tempfile::tempdir().unwrap();
        let data = file(&dir, "d.csv", "id,sent0,sent1\n2,b0,b1\n1,  a0 ,a1\n");
        let ds = load_pairs(&data, None).unwrap();
        assert_eq!(ds.ids().collect::<Vec<_>>(), ["2", "1"]);
        assert_eq!(ds.get("1").unwrap().sent0, "a0");
        assert_eq!(ds.get("1").unwrap().label, None);
    }

    #[test]
    fn illegal_pair_label_names_the_id() {
        let dir = tempfile::tempdir().unwrap();
        let data = file(&dir, "d.csv", "id,sent0,sent1\n7,x,y\n");
        let ans = file(&dir, "a.csv", "id,label\n7,2\n");
        let err = load_pairs(&data, Some(&ans)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"7\"") && msg.contains("label 2"), "{msg}");
        assert!(matches!(err, Error::InvalidLabel { line: 2, .. }));
    }

    #[test]
    fn duplicate_and_dangling_ids() {
        let dir = tempfile::tempdir().unwrap();
        let data = file(&dir, "d.csv", "id,sent0,sent1\n1,x,y\n1,z,w\n");
        assert!(matches!(
            load_pairs(&data, None).unwrap_err(),
            Error::DuplicateId { line: 3, .. }
        ));

        let data = file(&dir, "d2.csv", "id,sent0,sent1\n1,x,y\n");
        let ans = file(&dir, "a.csv", "id,label\n1,0\n9,1\n");
        assert!(matches!(
            load_pairs(&data, Some(&ans)).unwrap_err(),
            Error::UnknownId { line: 3, .. }
        ));

        let data = file(&dir, "d3.csv", "id,sent0,sent1\n1,x,y\n2,u,v\n");
        let ans = file(&dir, "a2.csv", "id,label\n1,0\n");
        assert!(matches!(
            load_pairs(&data, Some(&ans)).unwrap_err(),
            Error::MissingId { .. }
        ));
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let data = file(&dir, "d.csv", "id,sent0,sent1\n1,x\n");
        assert!(matches!(load_pairs(&data, None).unwrap_err(), Error::Malformed { .. }));
        let data = file(&dir, "d2.csv", "id,s0,s1\n1,x,y\n");
        assert!(matches!(load_pairs(&data, None).unwrap_err(), Error::Malformed { line: 1, .. }));
        let data = file(&dir, "d3.csv", "id,sent0,sent1\n1,   ,y\n");
        assert!(matches!(load_pairs(&data, None).unwrap_err(), Error::Malformed { line: 2, .. }));
    }

    #[test]
    fn choices_with_empty_option_fail() {
        let dir = tempfile::tempdir().unwrap();
        let ok = file(
            &dir,
            "ok.csv",
            "id,statement,option0,option1,option2\n1,\"He drinks, oil.\",a,b,c\n",
        );
        let ds = load_choices(&ok, None).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.get("1").unwrap().statement, "He drinks, oil.");
        assert_eq!(ds.get("1").unwrap().options.len(), 3);

        let bad = file(&dir, "bad.csv", "id,statement,option0,option1,option2\n1,s,a,,c\n");
        let err = load_choices(&bad, None).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn generation_references_drop_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let data = file(&dir, "g.csv", "id,statement\n1,s1\n2,s2\n");
        let refs = file(&dir, "r.csv", "id,ref0,ref1,ref2\n1,a,b,c\n2,x,,\n");
        let ds = load_generation(&data, &refs).unwrap();
        assert_eq!(ds.get("1").unwrap().references.len(), 3);
        assert_eq!(ds.get("2").unwrap().references, vec!["x".to_string()]);

        let refs = file(&dir, "r2.csv", "id,ref0,ref1,ref2\n1,a,b,c\n");
        assert!(matches!(load_generation(&data, &refs).unwrap_err(), Error::MissingId { .. }));

        let refs = file(&dir, "r3.csv", "id,ref0,ref1,ref2\n1,a,,\n2,b,,\n3,c,,\n");
        assert!(matches!(load_generation(&data, &refs).unwrap_err(), Error::UnknownId { .. }));

        let refs = file(&dir, "r4.csv", "id,ref0,ref1,ref2\n1,a,,\n2,,,\n");
        assert!(load_generation(&data, &refs).is_err());
    }

    #[test]
    fn distribution_of_balanced_labels() {
        let examples = (0..4)
            .map(|i| PairExample {
                id: i.to_string(),
                sent0: "a".into(),
                sent1: "b".into(),
                label: Some(i % 2),
            })
            .collect();
        let ds = Dataset::new(examples).unwrap();
        let dist = label_distribution(&ds).unwrap();
        assert_eq!(dist[&0], 0.5);
        assert_eq!(dist[&1], 0.5);
    }

    #[test]
    fn distribution_requires_labels() {
        let ds = Dataset::new(vec![PairExample {
            id: "1".into(),
            sent0: "a".into(),
            sent1: "b".into(),
            label: None,
        }])
        .unwrap();
        assert!(matches!(label_distribution(&ds), Err(Error::Unlabeled(_))));
    }
}
