mod common;

use comve::ensemble::{
    average_probabilities, predict, search_best_subset, Objective, ProbabilityMatrix, SearchOptions,
};
use comve::metrics::PredictionVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    names: Vec<String>,
    models: Vec<Vec<Vec<f64>>>,
    golds: Vec<usize>,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng, k: usize, classes: usize, n: usize) -> Self {
        let names = (0..k).map(|i| format!("model{:02}", (i * 7) % 13)).collect();
        let models = (0..k)
            .map(|_| (0..n).map(|_| common::random_row(rng, classes)).collect())
            .collect();
        let golds = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        Self { names, models, golds }
    }

    fn matrices(&self) -> Vec<ProbabilityMatrix> {
        self.names
            .iter()
            .zip(&self.models)
            .map(|(name, rows)| {
                ProbabilityMatrix::new(
                    name.clone(),
                    rows.iter().enumerate().map(|(i, r)| (format!("ex{i}"), r.clone())),
                )
                .unwrap()
            })
            .collect()
    }

    fn golds(&self) -> PredictionVector {
        self.golds.iter().enumerate().map(|(i, &g)| (format!("ex{i}"), g)).collect()
    }
}

#[test]
fn search_equals_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    for trial in 0..100 {
        let k = rng.gen_range(1..=8);
        let classes = if trial % 2 == 0 { 2 } else { 3 };
        let f1 = classes == 2 && trial % 4 == 0;
        let n = rng.gen_range(5..40);
        let inst = Instance::random(&mut rng, k, classes, n);
        let objective = if f1 { Objective::F1 } else { Objective::Accuracy };
        let got = search_best_subset(&inst.matrices(), &inst.golds(), objective, &SearchOptions::default()).unwrap();
        let (members, score) = common::oracle_best_subset(&inst.names, &inst.models, &inst.golds, f1);
        assert_eq!(got.member_ids, members, "trial {trial}");
        assert_eq!(got.dev_score, score, "trial {trial}");
        assert_eq!(got.subsets_evaluated, (1u64 << k) - 1);
    }
}

#[test]
fn best_subset_dominates_singletons() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let inst = Instance::random(&mut rng, 5, 2, 30);
        let ms = inst.matrices();
        let golds = inst.golds();
        let best = search_best_subset(&ms, &golds, Objective::Accuracy, &SearchOptions::default()).unwrap();
        for m in &ms {
            let single = comve::metrics::accuracy(&predict(m), &golds).unwrap();
            assert!(best.dev_score >= single);
        }
    }
}

#[test]
fn twelve_checkpoints_evaluate_4095_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inst = Instance::random(&mut rng, 12, 2, 50);
    let names: Vec<String> = (0..12).map(|i| format!("ckpt{i:02}")).collect();
    let inst = Instance { names, ..inst };
    let r = search_best_subset(&inst.matrices(), &inst.golds(), Objective::F1, &SearchOptions::default()).unwrap();
    assert_eq!(r.subsets_evaluated, 4095);
}

#[test]
fn result_does_not_depend_on_worker_count_or_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let inst = Instance::random(&mut rng, 9, 3, 40);
    let ms = inst.matrices();
    let golds = inst.golds();
    let base = search_best_subset(&ms, &golds, Objective::Accuracy, &SearchOptions { workers: Some(1), max_members: None }).unwrap();
    let mut reversed = ms.clone();
    reversed.reverse();
    for workers in [2, 3, 8] {
        let r = search_best_subset(&reversed, &golds, Objective::Accuracy, &SearchOptions { workers: Some(workers), max_members: None }).unwrap();
        assert_eq!(r.member_ids, base.member_ids);
        assert_eq!(r.dev_score, base.dev_score);
        assert_eq!(r.averaged, base.averaged);
    }
}

#[test]
fn averaged_matrix_is_mean_of_members_and_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = Instance::random(&mut rng, 4, 3, 25);
    let ms = inst.matrices();
    let avg = average_probabilities(&ms).unwrap();
    for (e, id) in avg.ids().iter().enumerate() {
        let row = avg.row(id).unwrap();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        for c in 0..3 {
            let mean = inst.models.iter().map(|m| m[e][c]).sum::<f64>() / 4.0;
            assert!((row[c] - mean).abs() < 1e-12);
        }
    }
    let mut permuted = ms.clone();
    permuted.rotate_left(1);
    assert_eq!(average_probabilities(&permuted).unwrap(), avg);
}

#[test]
fn predict_is_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let classes = rng.gen_range(2..6);
        let row = common::random_row(&mut rng, classes);
        let m = ProbabilityMatrix::new("m", [("a".to_string(), row.clone())]).unwrap();
        // rescaled rows no longer sum to one, so compare argmax directly
        let scale: f64 = rng.gen_range(0.01..100.0);
        let scaled: Vec<f64> = row.iter().map(|p| p * scale).collect();
        let mut expected = 0;
        for c in 1..classes {
            if scaled[c] > scaled[expected] {
                expected = c;
            }
        }
        assert_eq!(predict(&m).get("a"), Some(expected));
    }
}
