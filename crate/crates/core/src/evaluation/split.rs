//! Weight-balanced hold-out splits.
//!
//! Records are ordered by weight and cut into ten equal-count strata; each
//! stratum contributes its share of training rows, drawn uniformly at
//! random. Train quotas are apportioned by largest remainder so the train
//! size is exactly `round(train_frac * n)`.

use crate::error::{invalid, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_STRATA: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPair {
    /// Ascending row indices.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    /// Two-sample Kolmogorov-Smirnov distance between the train and test
    /// weight distributions.
    pub ks_distance: f64,
    /// False when the dataset was too small to stratify and a simple random
    /// split was used instead.
    pub stratified: bool,
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn weight_balanced_split(weights: &[f64], train_frac: f64, seed: u64) -> Result<SplitPair> {
    let n = weights.len();
    if n < 2 {
        return Err(invalid("need at least 2 rows to split"));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(invalid(format!("train fraction must lie in (0, 1), got {train_frac}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = ((train_frac * n as f64).round() as usize).clamp(1, n - 1);

    let stratified = n >= N_STRATA;
    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    if stratified {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
        let bounds: Vec<usize> = (0..=N_STRATA)
            .map(|k| (k as f64 * n as f64 / N_STRATA as f64).round() as usize)
            .collect();
        let sizes: Vec<usize> = bounds.windows(2).map(|b| b[1] - b[0]).collect();
        let ideal: Vec<f64> = sizes
            .iter()
            .map(|&s| s as f64 * n_train as f64 / n as f64)
            .collect();
        let mut quota: Vec<usize> = ideal.iter().map(|q| q.floor() as usize).collect();
        let mut short = n_train - quota.iter().sum::<usize>();
        let mut by_remainder: Vec<usize> = (0..N_STRATA).collect();
        by_remainder.shuffle(&mut rng);
        by_remainder.sort_by(|&a, &b| {
            let ra = ideal[a] - ideal[a].floor();
            let rb = ideal[b] - ideal[b].floor();
            rb.total_cmp(&ra)
        });
        for &k in &by_remainder {
            if short == 0 {
                break;
            }
            if quota[k] < sizes[k] {
                quota[k] += 1;
                short -= 1;
            }
        }
        for k in 0..N_STRATA {
            let mut members = order[bounds[k]..bounds[k + 1]].to_vec();
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..quota[k]]);
            test.extend_from_slice(&members[quota[k]..]);
        }
    } else {
        log::warn!("{n} rows are too few to stratify by weight; using a simple random split");
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        train.extend_from_slice(&order[..n_train]);
        test.extend_from_slice(&order[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let wt: Vec<f64> = train.iter().map(|&i| weights[i]).collect();
    let ws: Vec<f64> = test.iter().map(|&i| weights[i]).collect();
    Ok(SplitPair {
        ks_distance: ks_distance(&wt, &ws),
        train_indices: train,
        test_indices: test,
        seed,
        stratified,
    })
}
