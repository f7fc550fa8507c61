mod common;

use comve::analysis::{copy_source_baseline, correlation_report, error_breakdown, load_leaderboard};
use comve::dataset::{
    label_distribution, load_choices, load_generation, load_pairs, write_choices, write_generation, write_pairs,
    ChoiceExample, Dataset, GenerationExample, PairExample,
};
use comve::metrics::{self, PredictionVector};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    // no surrounding whitespace: loaders trim fields
    "[A-Za-z0-9,\"'. ]{0,20}[A-Za-z0-9,\".]".prop_map(|s| s.trim_start().to_string())
        .prop_filter("non-empty", |s| !s.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairs_round_trip(rows in prop::collection::vec((text(), text(), 0usize..2), 1..12)) {
        let ds = Dataset::new(rows.into_iter().enumerate().map(|(i, (a, b, l))| PairExample {
            id: format!("p{i}"), sent0: a, sent1: b, label: Some(l),
        }).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (data, answers) = (dir.path().join("d.csv"), dir.path().join("a.csv"));
        write_pairs(&ds, &data, Some(&answers)).unwrap();
        prop_assert_eq!(load_pairs(&data, Some(&answers)).unwrap(), ds);
    }

    #[test]
    fn choices_round_trip(rows in prop::collection::vec((text(), [text(), text(), text()], 0usize..3), 1..12)) {
        let ds = Dataset::new(rows.into_iter().enumerate().map(|(i, (s, o, l))| ChoiceExample {
            id: format!("c{i}"), statement: s, options: o, label: Some(l),
        }).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (data, answers) = (dir.path().join("d.csv"), dir.path().join("a.csv"));
        write_choices(&ds, &data, Some(&answers)).unwrap();
        prop_assert_eq!(load_choices(&data, Some(&answers)).unwrap(), ds);
    }

    #[test]
    fn generation_round_trip(rows in prop::collection::vec((text(), prop::collection::vec(text(), 1..=3)), 1..12)) {
        let ds = Dataset::new(rows.into_iter().enumerate().map(|(i, (s, r))| GenerationExample {
            id: format!("g{i}"), statement: s, references: r,
        }).collect()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (data, refs) = (dir.path().join("d.csv"), dir.path().join("r.csv"));
        write_generation(&ds, &data, &refs).unwrap();
        prop_assert_eq!(load_generation(&data, &refs).unwrap(), ds);
    }
}

#[test]
fn loading_is_deterministic() {
    let load = || load_pairs(common::fixture("smoke/pairs.csv"), Some(&common::fixture("smoke/pairs_answers.csv"))).unwrap();
    let (a, b) = (load(), load());
    assert_eq!(a, b);
    assert_eq!(a.ids().next(), Some("a00"));
    let dist = label_distribution(&a).unwrap();
    assert!((dist.values().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn copy_source_matches_reference_on_fixture() {
    let ds = load_generation(common::fixture("copy_source/data.csv"), common::fixture("copy_source/refs.csv")).unwrap();
    let got = copy_source_baseline(&ds).unwrap().score;
    assert!((got - common::expected_bleu("copy_source")).abs() < 0.01, "{got}");
}

#[test]
fn engineered_leaderboard_drops_at_the_top() {
    let rows = load_leaderboard(common::fixture("smoke/leaderboard.csv")).unwrap();
    let report = correlation_report(&rows, &[3]).unwrap();
    let overall = report.overall.r.clone().unwrap();
    let top = report.top_k[0].r.clone().unwrap();
    let bleu: Vec<f64> = rows.iter().map(|r| r.bleu).collect();
    let human: Vec<f64> = rows.iter().map(|r| r.human).collect();
    assert!((overall - common::oracle_pearson(&bleu, &human)).abs() < 1e-10);
    assert!(overall > 0.8 && top < 0.2, "{overall} {top}");
}

#[test]
fn error_breakdown_counts_every_miss() {
    let ds = load_pairs(common::fixture("smoke/pairs.csv"), Some(&common::fixture("smoke/pairs_answers.csv"))).unwrap();
    let golds = ds.labels().unwrap();
    let preds = metrics::load_predictions(common::fixture("smoke/pairs_preds.jsonl")).unwrap();
    let b = error_breakdown(&preds, &golds, &ds).unwrap();
    let acc = metrics::accuracy(&preds, &golds).unwrap();
    assert_eq!(b.total, ds.len());
    assert_eq!(b.records.len(), ((1.0 - acc) * ds.len() as f64).round() as usize);
    assert!(b.records.iter().all(|r| r.predicted != r.gold && r.inputs.len() == 2));

    let perfect: PredictionVector = golds.iter().map(|(id, l)| (id.to_string(), l)).collect();
    assert!(error_breakdown(&perfect, &golds, &ds).unwrap().records.is_empty());
}
