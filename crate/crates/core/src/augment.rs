//! Round-trip translation augmentation.
//!
//! Sentences are normalized, sent through a forward and a backward
//! translator process, and the resulting paraphrased examples are appended
//! to the original data unless the round trip left them unchanged.
//!
//! A translator is any program that reads UTF-8 lines on stdin and writes
//! exactly one translated line per input line, in order, to stdout, then
//! exits with status 0.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Command, Stdio};
use std::thread;

use crate::dataset::{Dataset, PairExample};
use crate::error::{Error, Result};
use crate::metrics;

/// Suffix appended to the id of a round-tripped example.
pub const RTT_SUFFIX: &str = "-rtt";

const SENTENCE_END: [char; 3] = ['.', '!', '?'];

/// Lowercase all-caps sentences and make sure the sentence ends with `.`, `!` or `?`.
///
/// A sentence counts as all-caps when it has at least two alphabetic
/// characters and every one of them is uppercase.
pub fn normalize(sentence: &str) -> Result<String> {
    let body = sentence.trim_end();
    let last = body
        .chars()
        .last()
        .ok_or_else(|| Error::invalid("cannot normalize an empty sentence"))?;

    let mut letters = 0usize;
    let mut all_upper = true;
    for c in sentence.chars().filter(|c| c.is_alphabetic()) {
        letters += 1;
        all_upper &= c.is_uppercase();
    }

    let mut out = if letters >= 2 && all_upper {
        sentence.to_lowercase()
    } else {
        sentence.to_string()
    };
    if !SENTENCE_END.contains(&last) {
        out.truncate(out.trim_end().len());
        out.push('.');
    }
    Ok(out)
}

/// An external translator process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslatorHandle {
    pub program: String,
    pub args: Vec<String>,
    /// Lines written between flushes.
    pub batch_size: usize,
}

impl TranslatorHandle {
    pub fn new(program: impl Into<String>, args: Vec<String>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::invalid("translator batch size must be positive"));
        }
        Ok(Self {
            program: program.into(),
            args,
            batch_size,
        })
    }

    /// A translator given as a `sh -c` command line.
    pub fn shell(command: impl Into<String>, batch_size: usize) -> Result<Self> {
        Self::new("sh", vec!["-c".into(), command.into()], batch_size)
    }

    /// Translate `lines` through the process, labelling failures with `stage`.
    pub fn translate(&self, lines: &[String], stage: &str) -> Result<Vec<String>> {
        let fail = |message: String| Error::Translator {
            stage: stage.to_string(),
            message,
        };
        if let Some(i) = lines.iter().position(|l| l.contains(['\n', '\r'])) {
            return Err(Error::invalid(format!(
                "{stage} translator input {i} contains a line break"
            )));
        }
        if lines.is_empty() {
            return Ok(Vec::new());
        }

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("cannot start {:?}: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");

        let batches: Vec<String> = lines
            .chunks(self.batch_size)
            .map(|chunk| {
                let mut batch = chunk.join("\n");
                batch.push('\n');
                batch
            })
            .collect();
        let writer = thread::spawn(move || -> std::io::Result<()> {
            for batch in batches {
                stdin.write_all(batch.as_bytes())?;
                stdin.flush()?;
            }
            Ok(())
        });
        let diagnostics = thread::spawn(move || {
            let mut text = String::new();
            let _ = stderr.read_to_string(&mut text);
            text
        });

        let mut output = Vec::with_capacity(lines.len());
        for line in BufReader::new(stdout).lines() {
            let mut line = line.map_err(|e| fail(format!("reading output: {e}")))?;
            if line.ends_with('\r') {
                line.pop();
            }
            output.push(line);
        }
        let written = writer.join().expect("translator writer thread panicked");
        let status = child
            .wait()
            .map_err(|e| fail(format!("waiting for process: {e}")))?;
        let diagnostics = diagnostics.join().unwrap_or_default();
        let diagnostics = diagnostics.trim();

        if !status.success() {
            return Err(fail(format!("process exited with {status}: {diagnostics}")));
        }
        if let Err(e) = written {
            return Err(fail(format!("input stream closed early: {e}")));
        }
        if output.len() != lines.len() {
            return Err(fail(format!(
                "produced {} lines for {} input lines",
                output.len(),
                lines.len()
            )));
        }
        Ok(output)
    }
}

/// `backward(forward(normalize(s)))` for every sentence, order preserved.
pub fn round_trip(
    sentences: &[String],
    forward: &TranslatorHandle,
    backward: &TranslatorHandle,
) -> Result<Vec<String>> {
    let normalized = sentences
        .iter()
        .map(|s| normalize(s))
        .collect::<Result<Vec<_>>>()?;
    let pivot = forward.translate(&normalized, "forward")?;
    backward.translate(&pivot, "backward")
}

/// Round-trip both sentences of every example; ids get the `-rtt` suffix and
/// labels are copied.
pub fn round_trip_pairs(
    original: &Dataset<PairExample>,
    forward: &TranslatorHandle,
    backward: &TranslatorHandle,
) -> Result<Dataset<PairExample>> {
    let mut sentences = Vec::with_capacity(2 * original.len());
    for e in original {
        sentences.push(e.sent0.clone());
        sentences.push(e.sent1.clone());
    }
    let translated = round_trip(&sentences, forward, backward)?;
    let examples = original
        .iter()
        .zip(translated.chunks(2))
        .map(|(e, pair)| PairExample {
            id: format!("{}{RTT_SUFFIX}", e.id),
            sent0: pair[0].trim().to_string(),
            sent1: pair[1].trim().to_string(),
            label: e.label,
        })
        .collect();
    Dataset::new(examples)
}

/// Counts from one augmentation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationReport {
    pub originals: usize,
    pub round_tripped: usize,
    pub duplicates_removed: usize,
    pub final_added: usize,
    /// BLEU of the round-tripped sentences against the originals; 0 when nothing was round-tripped.
    pub rtt_bleu: f64,
}

/// Append round-tripped examples that differ from their original.
///
/// An example is a duplicate when both normalized sentences equal the
/// normalized sentences of the example it was translated from.
pub fn augment_dataset(
    original: &Dataset<PairExample>,
    rtt: &Dataset<PairExample>,
) -> Result<(Dataset<PairExample>, AugmentationReport)> {
    let mut added = Vec::new();
    let mut duplicates_removed = 0;
    let mut original_sentences = Vec::with_capacity(2 * rtt.len());
    let mut rtt_sentences = Vec::with_capacity(2 * rtt.len());

    for example in rtt {
        let source = example
            .id
            .strip_suffix(RTT_SUFFIX)
            .and_then(|id| original.get(id))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "round-tripped example {:?} has no original counterpart",
                    example.id
                ))
            })?;
        let same = normalize(&example.sent0)? == normalize(&source.sent0)?
            && normalize(&example.sent1)? == normalize(&source.sent1)?;
        original_sentences.extend([source.sent0.as_str(), source.sent1.as_str()]);
        rtt_sentences.extend([example.sent0.as_str(), example.sent1.as_str()]);
        if same {
            duplicates_removed += 1;
        } else {
            added.push(PairExample {
                label: source.label,
                ..example.clone()
            });
        }
    }

    let rtt_bleu = if rtt.is_empty() {
        0.0
    } else {
        rtt_quality(&original_sentences, &rtt_sentences)?
    };
    let report = AugmentationReport {
        originals: original.len(),
        round_tripped: rtt.len(),
        duplicates_removed,
        final_added: added.len(),
        rtt_bleu,
    };
    let mut examples = original.examples().to_vec();
    examples.extend(added);
    Ok((Dataset::new(examples)?, report))
}

/// Corpus BLEU of round-tripped sentences against the originals.
pub fn rtt_quality<S: AsRef<str>, T: AsRef<str>>(originals: &[S], rtt: &[T]) -> Result<f64> {
    if originals.len() != rtt.len() {
        return Err(Error::LengthMismatch {
            left: originals.len(),
            right: rtt.len(),
        });
    }
    let refs: Vec<Vec<&str>> = originals.iter().map(|s| vec![s.as_ref()]).collect();
    Ok(metrics::corpus_bleu(rtt, &refs)?.score)
}
