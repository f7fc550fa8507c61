use std::collections::HashMap;

use crate::error::{Error, Result};

/// Highest n-gram order counted.
pub const MAX_ORDER: usize = 4;

/// Corpus-level BLEU with its components.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    /// 0-100.
    pub score: f64,
    /// Clipped n-gram precisions for orders 1..=4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_length: usize,
    pub ref_length: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Case-sensitive tokenization: runs of word characters form tokens and every
/// other non-whitespace character is a token of its own.
///
/// ```
/// assert_eq!(comve::metrics::tokenize("don't stop."), ["don", "'", "t", "stop", "."]);
/// ```
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(start) = word_start.take() {
            tokens.push(&text[start..i]);
        }
        if !c.is_whitespace() {
            tokens.push(&text[i..i + c.len_utf8()]);
        }
    }
    if let Some(start) = word_start {
        tokens.push(&text[start..]);
    }
    tokens
}

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over `hyps`, each with one or more references.
///
/// Clipped n-gram matches and totals are summed over the whole corpus
/// before the precisions are formed. The brevity penalty uses, per sentence,
/// the reference length closest to the hypothesis length (the shorter one on
/// a tie). A zero precision at any order makes the score 0; no smoothing.
pub fn corpus_bleu<H, R>(hyps: &[H], refs: &[Vec<R>]) -> Result<BleuScore>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            left: hyps.len(),
            right: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::invalid("BLEU of an empty hypothesis set"));
    }

    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut hyp_length = 0usize;
    let mut ref_length = 0usize;

    for (i, (hyp, sentence_refs)) in hyps.iter().zip(refs).enumerate() {
        if sentence_refs.is_empty() {
            return Err(Error::invalid(format!("hypothesis {i} has no reference")));
        }
        let hyp_tokens = tokenize(hyp.as_ref());
        let ref_tokens: Vec<Vec<&str>> = sentence_refs.iter().map(|r| tokenize(r.as_ref())).collect();

        hyp_length += hyp_tokens.len();
        ref_length += ref_tokens
            .iter()
            .map(Vec::len)
            .min_by_key(|&len| (len.abs_diff(hyp_tokens.len()), len))
            .unwrap_or(0);

        for n in 1..=MAX_ORDER {
            let hyp_counts = ngram_counts(&hyp_tokens, n);
            let mut max_ref_counts: HashMap<&[&str], usize> = HashMap::new();
            for tokens in &ref_tokens {
                for (gram, count) in ngram_counts(tokens, n) {
                    let slot = max_ref_counts.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            let clipped: usize = hyp_counts
                .iter()
                .map(|(gram, &count)| count.min(max_ref_counts.get(gram).copied().unwrap_or(0)))
                .sum();
            matches[n - 1] += clipped as u64;
            totals[n - 1] += hyp_tokens.len().saturating_sub(n - 1) as u64;
        }
    }

    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        if totals[n] > 0 {
            precisions[n] = matches[n] as f64 / totals[n] as f64;
        }
    }

    let brevity_penalty = if hyp_length > ref_length {
        1.0
    } else if hyp_length == 0 {
        0.0
    } else {
        (1.0 - ref_length as f64 / hyp_length as f64).exp()
    };

    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };

    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_length,
        ref_length,
    })
}
