//! Reference implementations used as test oracles. None of them call into
//! the code paths they check.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::Rng;

pub fn fixture(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path)
}

/// Frozen corpus BLEU values from the external reference implementation.
pub fn expected_bleu(name: &str) -> f64 {
    let text = std::fs::read_to_string(fixture("bleu/expected.json")).unwrap();
    let map: BTreeMap<String, f64> = serde_json::from_str(&text).unwrap();
    map[name]
}

#[derive(serde::Deserialize)]
struct CorpusLine {
    hyp: String,
    refs: Vec<String>,
}

pub fn load_corpus(name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(fixture(&format!("bleu/{name}.jsonl"))).unwrap();
    text.lines()
        .map(|l| {
            let c: CorpusLine = serde_json::from_str(l).unwrap();
            (c.hyp, c.refs)
        })
        .unzip()
}

fn oracle_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in s.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if c.is_alphanumeric() || c == '_' {
                word.push(c);
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(c.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    out
}

fn grams(tokens: &[String], n: usize) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        *m.entry(tokens[i..i + n].join("\u{1}")).or_insert(0) += 1;
        i += 1;
    }
    m
}

/// Corpus BLEU written from the textbook definition.
pub fn oracle_bleu(hyps: &[String], refs: &[Vec<String>]) -> f64 {
    let mut num = [0usize; 4];
    let mut den = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rs) in hyps.iter().zip(refs) {
        let ht = oracle_tokens(h);
        let rts: Vec<Vec<String>> = rs.iter().map(|x| oracle_tokens(x)).collect();
        c += ht.len();
        let mut best = usize::MAX;
        let mut best_diff = usize::MAX;
        for rt in &rts {
            let d = (rt.len() as i64 - ht.len() as i64).unsigned_abs() as usize;
            if d < best_diff || (d == best_diff && rt.len() < best) {
                best_diff = d;
                best = rt.len();
            }
        }
        r += best;
        for n in 1..=4 {
            let hg = grams(&ht, n);
            for (g, cnt) in &hg {
                let max_ref = rts.iter().map(|rt| grams(rt, n).get(g).copied().unwrap_or(0)).max().unwrap_or(0);
                num[n - 1] += (*cnt).min(max_ref);
            }
            den[n - 1] += ht.len().saturating_sub(n - 1);
        }
    }
    if num.contains(&0) {
        return 0.0;
    }
    let log_p: f64 = (0..4).map(|i| (num[i] as f64 / den[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_p.exp()
}

/// Pearson r from raw sums.
pub fn oracle_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// F1 from an explicit 2x2 confusion matrix `[gold][pred]`.
pub fn oracle_f1(preds: &[usize], golds: &[usize], positive: usize) -> f64 {
    let mut m = [[0usize; 2]; 2];
    for (&p, &g) in preds.iter().zip(golds) {
        m[g][p] += 1;
    }
    let neg = 1 - positive;
    let tp = m[positive][positive] as f64;
    let fp = m[neg][positive] as f64;
    let fn_ = m[positive][neg] as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fn_);
    2.0 * p * r / (p + r)
}

/// Exhaustive subset scan over `models[m][example][class]` by explicit
/// recursion, returning (sorted member names, score).
pub fn oracle_best_subset(
    names: &[String],
    models: &[Vec<Vec<f64>>],
    golds: &[usize],
    f1: bool,
) -> (Vec<String>, f64) {
    fn score(members: &[usize], models: &[Vec<Vec<f64>>], golds: &[usize], f1: bool) -> f64 {
        let preds: Vec<usize> = (0..golds.len())
            .map(|e| {
                let classes = models[0][e].len();
                let avg: Vec<f64> = (0..classes)
                    .map(|c| {
                        let mut s = 0.0;
                        for &m in members {
                            s += models[m][e][c];
                        }
                        s / members.len() as f64
                    })
                    .collect();
                let mut best = 0;
                for c in 1..classes {
                    if avg[c] > avg[best] {
                        best = c;
                    }
                }
                best
            })
            .collect();
        if f1 {
            oracle_f1(&preds, golds, 1)
        } else {
            preds.iter().zip(golds).filter(|(p, g)| p == g).count() as f64 / golds.len() as f64
        }
    }

    // order models by name so member lists are comparable
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));

    let mut best: Option<(Vec<String>, f64)> = None;
    let mut current = Vec::new();
    fn recurse(
        start: usize,
        order: &[usize],
        current: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        for i in start..order.len() {
            current.push(order[i]);
            visit(current);
            recurse(i + 1, order, current, visit);
            current.pop();
        }
    }
    let mut visit = |members: &[usize]| {
        let s = score(members, models, golds, f1);
        let ids: Vec<String> = members.iter().map(|&m| names[m].clone()).collect();
        let take = match &best {
            None => true,
            Some((bids, bs)) => {
                s > *bs || (s == *bs && (ids.len() < bids.len() || (ids.len() == bids.len() && ids < *bids)))
            }
        };
        if take {
            best = Some((ids, s));
        }
    };
    recurse(0, &order, &mut current, &mut visit);
    best.unwrap()
}

/// A random probability row of `classes` entries.
pub fn random_row<R: Rng>(rng: &mut R, classes: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..classes).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}
