mod common;

use comve::metrics::{self, corpus_bleu, PredictionVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pv(labels: &[usize]) -> PredictionVector {
    labels.iter().enumerate().map(|(i, &l)| (format!("x{i}"), l)).collect()
}

#[test]
fn bleu_matches_reference_on_mini_corpus() {
    let (hyps, refs) = common::load_corpus("mini");
    let bleu = corpus_bleu(&hyps, &refs).unwrap();
    assert!((bleu.score - common::expected_bleu("mini")).abs() < 0.01, "{}", bleu.score);
    assert!((bleu.score - common::oracle_bleu(&hyps, &refs)).abs() < 1e-9);
}

#[test]
fn bleu_components_are_consistent() {
    let (hyps, refs) = common::load_corpus("synthetic50");
    let b = corpus_bleu(&hyps, &refs).unwrap();
    let geo = b.precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
    assert!((b.score - 100.0 * b.brevity_penalty * geo.exp()).abs() < 1e-9);
    assert!(b.brevity_penalty > 0.0 && b.brevity_penalty <= 1.0);
    assert!(b.precisions.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn f1_agrees_with_confusion_matrix_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(1..60);
        let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let golds: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let got = metrics::binary_f1(&pv(&preds), &pv(&golds), 1).unwrap().value;
        assert!((got - common::oracle_f1(&preds, &golds, 1)).abs() < 1e-12);
    }
}

#[test]
fn pearson_agrees_with_sum_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(3..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * rng.gen_range(-1.0..1.0) + rng.gen_range(-2.0..2.0)).collect();
        let got = metrics::pearson(&xs, &ys).unwrap();
        assert!((got - common::oracle_pearson(&xs, &ys)).abs() < 1e-10);
    }
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "dog", "cat", ".", ",", "eat"]), 1..12)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn accuracy_and_f1_ignore_order(labels in prop::collection::vec((0usize..2, 0usize..2), 1..40), seed in any::<u64>()) {
        let preds: Vec<(String, usize)> = labels.iter().enumerate().map(|(i, (p, _))| (i.to_string(), *p)).collect();
        let golds: Vec<(String, usize)> = labels.iter().enumerate().map(|(i, (_, g))| (i.to_string(), *g)).collect();
        let mut shuffled = preds.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = PredictionVector::new(preds).unwrap();
        let b = PredictionVector::new(shuffled).unwrap();
        let g = PredictionVector::new(golds).unwrap();
        prop_assert_eq!(metrics::accuracy(&a, &g).unwrap(), metrics::accuracy(&b, &g).unwrap());
        prop_assert_eq!(metrics::binary_f1(&a, &g, 1).unwrap(), metrics::binary_f1(&b, &g, 1).unwrap());
    }

    #[test]
    fn bleu_is_bounded_and_self_is_100(hyps in prop::collection::vec(words(), 1..8), refs in prop::collection::vec(words(), 1..8)) {
        let n = hyps.len().min(refs.len());
        let self_refs: Vec<Vec<&str>> = hyps[..n].iter().map(|h| vec![h.as_str()]).collect();
        let own = corpus_bleu(&hyps[..n], &self_refs).unwrap();
        // self-BLEU is 100 unless some order has no n-grams at all
        if own.precisions.iter().all(|&p| p > 0.0) {
            prop_assert!((own.score - 100.0).abs() < 1e-9);
        }
        let other: Vec<Vec<&str>> = refs[..n].iter().map(|r| vec![r.as_str()]).collect();
        let s = corpus_bleu(&hyps[..n], &other).unwrap().score;
        prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
    }

    #[test]
    fn extra_reference_never_lowers_precision_counts(hyp in words(), r1 in words(), r2 in words()) {
        let one = corpus_bleu(&[hyp.as_str()], &[vec![r1.as_str()]]).unwrap();
        let two = corpus_bleu(&[hyp.as_str()], &[vec![r1.as_str(), r2.as_str()]]).unwrap();
        for n in 0..4 {
            prop_assert!(two.precisions[n] >= one.precisions[n]);
        }
    }

    #[test]
    fn bleu_matches_oracle(hyps in prop::collection::vec(words(), 1..6), refs in prop::collection::vec(prop::collection::vec(words(), 1..4), 6)) {
        let n = hyps.len();
        let got = corpus_bleu(&hyps, &refs[..n]).unwrap().score;
        prop_assert!((got - common::oracle_bleu(&hyps, &refs[..n])).abs() < 1e-9);
    }

    #[test]
    fn pearson_affine_and_antisymmetric(
        xs in prop::collection::vec(-100.0f64..100.0, 3..30),
        noise in prop::collection::vec(-10.0f64..10.0, 30),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
        let Ok(r) = metrics::pearson(&xs, &ys) else { return Ok(()); };
        let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        prop_assert!((metrics::pearson(&moved, &ys).unwrap() - r).abs() < 1e-9);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        prop_assert!((metrics::pearson(&xs, &neg).unwrap() + r).abs() < 1e-9);
    }
}
