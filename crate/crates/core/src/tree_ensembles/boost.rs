//! Least-squares gradient boosting with `J`-leaf regression trees.

use super::tree::{fit_tree_data, Presorted, RegressionTree, TreeControls, TreeData};
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostOptions {
    pub n_stages: usize,
    /// Terminal nodes per tree.
    pub j: usize,
    pub shrinkage: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for BoostOptions {
    fn default() -> Self {
        BoostOptions {
            n_stages: 300,
            j: 6,
            shrinkage: 0.1,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: RegressionTree,
    /// Line-search multiplier applied to the tree before shrinkage.
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub f0: f64,
    pub stages: Vec<BoostStage>,
    pub shrinkage: f64,
    pub j: usize,
    /// Weighted mean squared training error after `m` stages, `m = 0..=M`.
    pub loss_trace: Vec<f64>,
    pub n_features: usize,
}

fn weighted_mse(y: &[f64], f: &[f64], w: &[f64], sw: f64) -> f64 {
    y.iter()
        .zip(f)
        .zip(w)
        .map(|((y, f), w)| w * (y - f) * (y - f))
        .sum::<f64>()
        / sw
}

pub fn fit_ls_boost_matrix(
    x: &DMatrix<f64>,
    categorical: &[bool],
    y: &[f64],
    w: &[f64],
    opts: &BoostOptions,
) -> Result<BoostModel> {
    let (n, p) = x.shape();
    if opts.j < 2 {
        return Err(invalid("J must be at least 2"));
    }
    if !(opts.shrinkage > 0.0 && opts.shrinkage <= 1.0) {
        return Err(invalid(format!("shrinkage must lie in (0, 1], got {}", opts.shrinkage)));
    }
    if n == 0 {
        return Err(invalid("cannot boost on an empty training set"));
    }
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len().min(w.len()) });
    }
    let sw: f64 = w.iter().sum();
    let f0 = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut f = vec![f0; n];
    let mut loss_trace = vec![weighted_mse(y, &f, w, sw)];
    let presorted = Presorted::new(x);
    let controls = TreeControls {
        max_leaves: Some(opts.j),
        min_samples_leaf: opts.min_samples_leaf,
        ..Default::default()
    };
    // no per-split feature sampling, so the generator is never consulted
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut stages = Vec::with_capacity(opts.n_stages);
    let mut residual = vec![0.0; n];
    for _ in 0..opts.n_stages {
        for i in 0..n {
            residual[i] = y[i] - f[i];
        }
        let data = TreeData {
            x,
            categorical,
            y: &residual,
            w,
            counts: None,
            features: None,
            presorted: Some(&presorted),
        };
        let tree = fit_tree_data(&data, &controls, &mut rng)?;
        let h: Vec<f64> = (0..n)
            .map(|i| tree.nodes[tree.leaf_of(|c| x[(i, c)])].value)
            .collect();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            num += w[i] * residual[i] * h[i];
            den += w[i] * h[i] * h[i];
        }
        let multiplier = if den > 0.0 { num / den } else { 0.0 };
        let step = opts.shrinkage * multiplier;
        for i in 0..n {
            f[i] += step * h[i];
        }
        loss_trace.push(weighted_mse(y, &f, w, sw));
        stages.push(BoostStage { tree, multiplier });
    }
    Ok(BoostModel {
        f0,
        stages,
        shrinkage: opts.shrinkage,
        j: opts.j,
        loss_trace,
        n_features: p,
    })
}

impl BoostModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.predict_stages(x, self.stages.len())
    }

    /// Prediction using only the first `m` stages.
    pub fn predict_stages(&self, x: &DMatrix<f64>, m: usize) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let mut f = vec![self.f0; x.nrows()];
        for s in self.stages.iter().take(m) {
            let step = self.shrinkage * s.multiplier;
            for (i, v) in f.iter_mut().enumerate() {
                *v += step * s.tree.nodes[s.tree.leaf_of(|c| x[(i, c)])].value;
            }
        }
        Ok(f)
    }
}
