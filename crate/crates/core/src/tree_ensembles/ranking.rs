//! Recursive feature elimination scored by random-forest trees.
//!
//! Each round fits a forest on the surviving features. A feature is scored
//! when it is used by at least `appearance_threshold` of the trees; its
//! score is the mean of `-OOB WEPS` over those trees. The worst
//! `drop_fraction` of the scored features (at least one) is removed and the
//! next round starts, until `target_count` features remain.

use super::forest::{fit_forest_matrix, ForestOptions};
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankingOptions {
    pub appearance_threshold: f64,
    pub drop_fraction: f64,
    pub target_count: usize,
    /// Forest refit every round. When `subspace` is unset, each tree sees a
    /// random third of the surviving features.
    pub forest: ForestOptions,
}

impl Default for RankingOptions {
    fn default() -> Self {
        RankingOptions {
            appearance_threshold: 0.25,
            drop_fraction: 0.20,
            target_count: 10,
            forest: ForestOptions {
                n_trees: 50,
                controls: super::tree::TreeControls {
                    min_samples_leaf: 5,
                    ..Default::default()
                },
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    /// Column index in the input matrix.
    pub column: usize,
    /// `None` when the feature appeared in too few trees to be scored.
    pub score: Option<f64>,
    /// Fraction of trees using the feature.
    pub appearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRound {
    pub round: usize,
    pub scores: Vec<FeatureScore>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Surviving features first (best final score first, unscored last),
    /// then eliminated features from the last dropped to the first.
    pub ordered: Vec<FeatureScore>,
    pub selected: Vec<String>,
    pub rounds: Vec<RankingRound>,
}

pub fn rf_feature_ranking_matrix(
    x: &DMatrix<f64>,
    categorical: &[bool],
    names: &[String],
    y: &[f64],
    w: &[f64],
    opts: &RankingOptions,
) -> Result<FeatureRanking> {
    let p = x.ncols();
    if names.len() != p || categorical.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: names.len() });
    }
    if opts.target_count == 0 || opts.target_count >= p {
        return Err(invalid(format!(
            "target_count must lie in 1..{p}, got {}",
            opts.target_count
        )));
    }
    if !(0.0..=1.0).contains(&opts.appearance_threshold) {
        return Err(invalid("appearance_threshold must lie in [0, 1]"));
    }
    if !(opts.drop_fraction > 0.0 && opts.drop_fraction <= 1.0) {
        return Err(invalid("drop_fraction must lie in (0, 1]"));
    }
    if !opts.forest.bootstrap {
        return Err(invalid("feature ranking needs bootstrap forests for out-of-bag scores"));
    }
    let mut surviving: Vec<usize> = (0..p).collect();
    let mut rounds = Vec::new();
    let mut eliminated: Vec<FeatureScore> = Vec::new();
    let mut last_scores: Vec<FeatureScore> = Vec::new();
    let mut empty_rounds = 0;
    let mut round = 0;
    while surviving.len() > opts.target_count {
        round += 1;
        let sub = x.select_columns(&surviving);
        let cats: Vec<bool> = surviving.iter().map(|&c| categorical[c]).collect();
        let q = surviving.len();
        let mut forest_opts = opts.forest;
        forest_opts.seed = opts.forest.seed.wrapping_add(1_000_003 * (round as u64 - 1));
        forest_opts.subspace = Some(opts.forest.subspace.unwrap_or(q.div_ceil(3)).min(q));
        if let Some(m) = forest_opts.m_try {
            forest_opts.m_try = Some(m.min(q));
        }
        let forest = fit_forest_matrix(&sub, &cats, y, w, &forest_opts)?;
        let n_trees = forest.trees.len() as f64;
        let tree_score: Vec<f64> = forest
            .oob_weps
            .iter()
            .map(|o| o.map_or(f64::NAN, |e| -e))
            .collect();
        let worst = tree_score
            .iter()
            .copied()
            .filter(|s| s.is_finite())
            .fold(f64::INFINITY, f64::min);
        let used: Vec<Vec<usize>> = forest.trees.iter().map(|t| t.used_features()).collect();
        let scores: Vec<FeatureScore> = (0..q)
            .map(|k| {
                let with: Vec<f64> = used
                    .iter()
                    .zip(&tree_score)
                    .filter(|(u, s)| s.is_finite() && u.binary_search(&k).is_ok())
                    .map(|(_, s)| *s)
                    .collect();
                let appearance = used.iter().filter(|u| u.binary_search(&k).is_ok()).count() as f64
                    / n_trees;
                let score = if appearance >= opts.appearance_threshold {
                    if with.is_empty() {
                        // never used: as bad as the worst tree
                        worst.is_finite().then_some(worst)
                    } else {
                        Some(with.iter().sum::<f64>() / with.len() as f64)
                    }
                } else {
                    None
                };
                FeatureScore {
                    name: names[surviving[k]].clone(),
                    column: surviving[k],
                    score,
                    appearance,
                }
            })
            .collect();
        let mut scored: Vec<usize> = (0..q).filter(|&k| scores[k].score.is_some()).collect();
        scored.sort_by(|&a, &b| {
            scores[a]
                .score
                .unwrap()
                .total_cmp(&scores[b].score.unwrap())
                .then(a.cmp(&b))
        });
        let want = ((opts.drop_fraction * scored.len() as f64).ceil() as usize).max(1);
        let n_drop = want.min(scored.len()).min(q - opts.target_count);
        let drop: Vec<usize> = scored[..n_drop].to_vec();
        if drop.is_empty() {
            empty_rounds += 1;
            rounds.push(RankingRound { round, scores, dropped: Vec::new() });
            if empty_rounds >= 2 {
                return Err(invalid(format!(
                    "feature elimination stalled: no feature reached the appearance threshold {} in two consecutive rounds ({} features left)",
                    opts.appearance_threshold,
                    surviving.len()
                )));
            }
            continue;
        }
        empty_rounds = 0;
        for &k in &drop {
            eliminated.push(scores[k].clone());
        }
        let dropped_names = drop.iter().map(|&k| scores[k].name.clone()).collect();
        let keep: Vec<usize> = (0..q)
            .filter(|k| !drop.contains(k))
            .map(|k| surviving[k])
            .collect();
        last_scores = scores
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, s)| s.clone())
            .collect();
        rounds.push(RankingRound { round, scores, dropped: dropped_names });
        surviving = keep;
    }
    last_scores.sort_by(|a, b| match (a.score, b.score) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.column.cmp(&b.column),
    });
    let selected = last_scores.iter().map(|s| s.name.clone()).collect();
    let mut ordered = last_scores;
    ordered.extend(eliminated.into_iter().rev());
    Ok(FeatureRanking { ordered, selected, rounds })
}
