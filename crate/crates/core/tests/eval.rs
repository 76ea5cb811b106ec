use std::collections::BTreeMap;

use hypnos_core::eval::{
    accuracy, cohen_kappa, grouped_kfold, macro_f1, run_dt, run_lfs_cv, Dataset, LabeledRecording,
};
use hypnos_core::{LogisticOptions, SleepStage, CLASSES};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..200).prop_flat_map(|n| (prop::collection::vec(0usize..5, n), prop::collection::vec(0usize..5, n)))
}

proptest! {
    #[test]
    fn metrics_match_brute_force((t, p) in stream()) {
        let ts: Vec<SleepStage> = t.iter().map(|&k| CLASSES[k]).collect();
        let ps: Vec<SleepStage> = p.iter().map(|&k| CLASSES[k]).collect();
        let n = t.len() as f64;
        let agree = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64;
        prop_assert_eq!(accuracy(&ts, &ps).unwrap(), agree / n);

        // Textbook kappa from per-class marginal probabilities.
        let pe: f64 = (0..5)
            .map(|k| {
                let a = t.iter().filter(|&&v| v == k).count() as f64 / n;
                let b = p.iter().filter(|&&v| v == k).count() as f64 / n;
                a * b
            })
            .sum();
        let kappa = cohen_kappa(&ts, &ps).unwrap();
        if (1.0 - pe).abs() < 1e-12 {
            prop_assert_eq!(kappa, 0.0);
        } else {
            prop_assert!((kappa - (agree / n - pe) / (1.0 - pe)).abs() < 1e-12);
        }

        // F1 from precision and recall, averaged over classes seen anywhere.
        let mut f1s = Vec::new();
        for k in 0..5 {
            let tp = t.iter().zip(&p).filter(|(&a, &b)| a == k && b == k).count() as f64;
            let in_t = t.iter().filter(|&&v| v == k).count() as f64;
            let in_p = p.iter().filter(|&&v| v == k).count() as f64;
            if in_t + in_p == 0.0 {
                continue;
            }
            let prec = if in_p > 0.0 { tp / in_p } else { 0.0 };
            let rec = if in_t > 0.0 { tp / in_t } else { 0.0 };
            f1s.push(if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 });
        }
        let mf1 = f1s.iter().sum::<f64>() / f1s.len() as f64;
        prop_assert!((macro_f1(&ts, &ps).unwrap() - mf1).abs() < 1e-12);
    }

    #[test]
    fn folds_are_balanced_and_order_free(n in 1usize..40, k in 1usize..10, seed in 0u64..100) {
        prop_assume!(k <= n);
        let mut subjects: Vec<String> = (0..n).map(|i| format!("S{i:02}")).collect();
        let plan = grouped_kfold(&subjects, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..subjects.len()).rev() {
            subjects.swap(i, rng.random_range(0..=i));
        }
        subjects.extend(subjects.clone());
        prop_assert_eq!(&grouped_kfold(&subjects, k).unwrap(), &plan);
        let mut sizes = vec![0usize; k];
        for &f in plan.assignments.values() {
            sizes[f] += 1;
        }
        prop_assert_eq!(plan.assignments.len(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

fn dataset(n_subjects: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let recordings = (0..n_subjects)
        .flat_map(|s| (0..2).map(move |r| (s, r)))
        .map(|(s, r)| {
            let stages: Vec<SleepStage> = (0..25).map(|i| CLASSES[(i * 3 + s + r) % 5]).collect();
            let features = Array2::from_shape_fn((25, 6), |(i, c)| {
                rng.random_range(0.0..1.0) + if c == stages[i].class_index().unwrap() { 1.5 } else { 0.0 }
            });
            LabeledRecording {
                subject_id: format!("S{s}"),
                recording_id: format!("S{s}R{r}"),
                epoch_index: (0..25).collect(),
                features,
                stages,
            }
        })
        .collect();
    Dataset { name: "d".into(), schema_hash: "h".into(), recordings }
}

#[test]
fn direct_transfer_on_a_fold_split_equals_that_fold() {
    let data = dataset(5, 1);
    let plan = grouped_kfold(&data.subjects(), 5).unwrap();
    let opts = LogisticOptions::default();
    let lfs = run_lfs_cv(&data, &plan, &opts).unwrap();
    for fold in 0..5 {
        let (test, train): (Vec<_>, Vec<_>) =
            data.recordings.iter().cloned().partition(|r| plan.fold_of(&r.subject_id) == Some(fold));
        let train = Dataset { recordings: train, ..data.clone() };
        let test = Dataset { recordings: test, ..data.clone() };
        let (dt, _) = run_dt(&train, &test, &opts, &[], false).unwrap();
        let from_lfs: Vec<_> = lfs.predictions.iter().filter(|p| p.fold == Some(fold)).collect();
        assert_eq!(dt.predictions.len(), from_lfs.len());
        for (a, b) in dt.predictions.iter().zip(from_lfs) {
            assert_eq!((a.epoch_index, &a.recording_id, a.pred), (b.epoch_index, &b.recording_id, b.pred));
            assert!(a.proba.iter().zip(&b.proba).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

#[test]
fn pooled_confusion_is_the_sum_of_folds() {
    let data = dataset(6, 2);
    let plan = grouped_kfold(&data.subjects(), 3).unwrap();
    let out = run_lfs_cv(&data, &plan, &LogisticOptions::default()).unwrap();
    let mut sum = hypnos_core::eval::ConfusionMatrix::default();
    for f in &out.per_fold {
        sum.add(&f.confusion);
    }
    assert_eq!(sum, out.pooled.confusion);
    assert_eq!(out.pooled.n_epochs as usize, data.n_rows());
}

#[test]
fn exclusions_and_overlap_in_direct_transfer() {
    let train = dataset(3, 3);
    let mut eval = dataset(4, 4);
    eval.recordings.retain(|r| r.subject_id == "S3");
    let opts = LogisticOptions::default();
    assert!(run_dt(&train, &eval, &opts, &[], false).is_ok());
    let shared = dataset(3, 5);
    assert!(run_dt(&train, &shared, &opts, &[], false).is_err());
    assert!(run_dt(&train, &shared, &opts, &[], true).is_ok());
    let excluded: Vec<String> = vec!["S0".into(), "S1".into(), "S2".into()];
    assert!(run_dt(&train, &shared, &opts, &excluded, false).is_err(), "nothing left to train on");
    let (_, model) = run_dt(&train, &eval, &opts, &excluded[..1], false).unwrap();
    let subjects: BTreeMap<&str, ()> = model.meta.subjects.iter().map(|s| (s.as_str(), ())).collect();
    assert!(!subjects.contains_key("S0") && subjects.contains_key("S1"));
}
