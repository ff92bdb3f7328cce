use bondlearn::dataset::{generate_synthetic, Dataset, SyntheticConfig};
use bondlearn::evaluation::{
    ks_distance, run_cv, significance_interval, weight_balanced_split, weps, CvOptions, Predictor,
};
use bondlearn::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

/// Weighted absolute error evaluated term by term.
fn weps_oracle(y: &[f64], p: &[f64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..y.len() {
        num += w[i] * (y[i] - p[i]).abs();
        den += w[i];
    }
    num / den
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(50.0..150.0f64, n),
            prop::collection::vec(50.0..150.0f64, n),
            prop::collection::vec(0.01..10.0f64, n),
        )
    })
}

#[test]
fn weps_matches_hand_evaluation_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.random_range(1..20);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(80.0..120.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(80.0..120.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let got = weps(&y, &p, &w).unwrap();
        assert!((got - weps_oracle(&y, &p, &w)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn weps_is_permutation_invariant((y, p, w) in instance(), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..y.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let a = weps(&y, &p, &w).unwrap();
        let b = weps(&pick(&y), &pick(&p), &pick(&w)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn weps_ignores_weight_scale((y, p, w) in instance(), c in 1e-3..1e3f64) {
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let a = weps(&y, &p, &w).unwrap();
        let b = weps(&y, &p, &scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn weps_triangle_bound((a, b, w) in instance(), shift in -5.0..5.0f64) {
        let c: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let ac = weps(&a, &c, &w).unwrap();
        let ab = weps(&a, &b, &w).unwrap();
        let bc = weps(&b, &c, &w).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn equal_errors_give_symmetric_interval(e in 0.0..1.0f64, n in 1usize..100_000) {
        let s = significance_interval(e, e, n).unwrap();
        prop_assert_eq!(s.difference, 0.0);
        prop_assert!((s.lower.unwrap() + s.upper.unwrap()).abs() < 1e-15);
        prop_assert!(!s.significant);
    }
}

#[test]
fn published_interval_example() {
    let s = significance_interval(0.10, 0.12, 10_000).unwrap();
    assert!((s.variance - 1.956e-5).abs() < 1e-12);
    let sigma = 1.956e-5f64.sqrt();
    assert!((s.sigma.unwrap() - sigma).abs() < 1e-12);
    assert!((s.lower.unwrap() - (-0.02 - 1.96 * sigma)).abs() < 1e-12);
    assert!((s.upper.unwrap() - (-0.02 + 1.96 * sigma)).abs() < 1e-12);
    assert!(s.significant);
}

#[test]
fn split_is_deterministic_and_partitions_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w: Vec<f64> = (0..1234).map(|_| rng.random_range(0.1..3.0)).collect();
    let a = weight_balanced_split(&w, 0.7, 42).unwrap();
    let b = weight_balanced_split(&w, 0.7, 42).unwrap();
    assert_eq!(a, b);
    let mut all: Vec<usize> = a.train_indices.iter().chain(&a.test_indices).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..1234).collect::<Vec<_>>());
    assert!((a.train_indices.len() as f64 - 0.7 * 1234.0).abs() <= 1.0);
}

#[test]
fn stratified_splits_balance_lognormal_weights() {
    let dist = LogNormal::new(0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
    let mut strat_worse = 0;
    for seed in 0..20 {
        let s = weight_balanced_split(&w, 0.7, seed).unwrap();
        assert!(s.stratified);
        assert!(s.ks_distance < 0.03, "seed {seed}: KS {}", s.ks_distance);
        // a plain random split of the same sizes
        let mut idx: Vec<usize> = (0..w.len()).collect();
        let mut r = ChaCha8Rng::seed_from_u64(1000 + seed);
        for i in (1..idx.len()).rev() {
            idx.swap(i, r.random_range(0..=i));
        }
        let (tr, te) = idx.split_at(7000);
        let pick = |ix: &[usize]| ix.iter().map(|&i| w[i]).collect::<Vec<_>>();
        if ks_distance(&pick(tr), &pick(te)) < s.ks_distance {
            strat_worse += 1;
        }
    }
    assert!(strat_worse <= 5, "random splits beat stratified ones {strat_worse} times out of 20");
}

struct Constant(f64);

impl Predictor for Constant {
    fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        Ok(vec![self.0; ds.len()])
    }
}

fn weighted_mean_trainer(ds: &Dataset) -> Result<Constant> {
    let sw: f64 = ds.weights().iter().sum();
    Ok(Constant(
        ds.targets().iter().zip(ds.weights()).map(|(y, w)| y * w).sum::<f64>() / sw,
    ))
}

#[test]
fn constant_target_gives_zero_error() {
    let ds = generate_synthetic(&SyntheticConfig::new(300, 4, 1)).unwrap();
    let ds = ds.with_targets(vec![101.25; ds.len()]).unwrap();
    let run = run_cv(&ds, weighted_mean_trainer, &CvOptions::default(), "mean", serde_json::Value::Null).unwrap();
    assert_eq!(run.result.instances.len(), 5);
    assert!(run.result.mean_train_weps.unwrap().abs() < 1e-12);
    assert!(run.result.mean_test_weps.unwrap().abs() < 1e-12);
}

#[test]
fn cv_is_reproducible_and_means_are_means() {
    let ds = generate_synthetic(&SyntheticConfig::new(500, 4, 9)).unwrap();
    let opts = CvOptions {
        base_seed: 77,
        ..Default::default()
    };
    let a = run_cv(&ds, weighted_mean_trainer, &opts, "mean", serde_json::Value::Null).unwrap().result;
    let b = run_cv(&ds, weighted_mean_trainer, &opts, "mean", serde_json::Value::Null).unwrap().result;
    assert_eq!(a.instances.len(), b.instances.len());
    for (x, y) in a.instances.iter().zip(&b.instances) {
        assert_eq!(x.seed, y.seed);
        assert_eq!(x.train_weps, y.train_weps);
        assert_eq!(x.test_weps, y.test_weps);
    }
    let mean = a.instances.iter().map(|i| i.test_weps.unwrap()).sum::<f64>() / 5.0;
    assert!((a.mean_test_weps.unwrap() - mean).abs() < 1e-15);
    assert_eq!(a.instances.iter().map(|i| i.seed).collect::<Vec<_>>(), vec![77, 78, 79, 80, 81]);

    let parallel = run_cv(
        &ds,
        weighted_mean_trainer,
        &CvOptions {
            parallel: true,
            ..opts.clone()
        },
        "mean",
        serde_json::Value::Null,
    )
    .unwrap()
    .result;
    assert_eq!(parallel.mean_test_weps, a.mean_test_weps);

    let one = run_cv(
        &ds,
        weighted_mean_trainer,
        &CvOptions {
            n_instances: 1,
            ..opts
        },
        "mean",
        serde_json::Value::Null,
    )
    .unwrap()
    .result;
    assert_eq!(one.mean_test_weps, one.instances[0].test_weps);
}

#[test]
fn failed_instances_are_surfaced() {
    let ds = generate_synthetic(&SyntheticConfig::new(200, 4, 9)).unwrap();
    let flaky = |train: &Dataset| -> Result<Constant> {
        if train.records()[0].row_id % 2 == 0 {
            Err(bondlearn::Error::Numerical("refused".into()))
        } else {
            weighted_mean_trainer(train)
        }
    };
    let r = run_cv(&ds, flaky, &CvOptions::default(), "flaky", serde_json::Value::Null).unwrap().result;
    let failed = r.instances.iter().filter(|i| !i.completed()).count();
    assert_eq!(r.failed_instances, failed);
    assert_eq!(r.instances.len(), 5);
    if failed < 5 {
        let done: Vec<f64> = r.instances.iter().filter_map(|i| i.test_weps).collect();
        let mean = done.iter().sum::<f64>() / done.len() as f64;
        assert!((r.mean_test_weps.unwrap() - mean).abs() < 1e-15);
    } else {
        assert!(r.mean_test_weps.is_none());
    }
}
