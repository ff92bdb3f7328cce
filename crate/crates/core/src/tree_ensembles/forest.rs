//! Bagged trees and random forests.

use super::tree::{fit_tree_data, Presorted, RegressionTree, TreeControls, TreeData};
use crate::error::{invalid, Error, Result};
use crate::evaluation::weps;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestOptions {
    pub n_trees: usize,
    /// Features tried per split; `None` tries all of them (bagging).
    pub m_try: Option<usize>,
    pub bootstrap: bool,
    pub controls: TreeControls,
    pub seed: u64,
    /// Size of a random feature subset drawn once per tree; splits of that
    /// tree only consider features in the subset.
    pub subspace: Option<usize>,
}

impl Default for ForestOptions {
    fn default() -> Self {
        ForestOptions {
            n_trees: 100,
            m_try: None,
            bootstrap: true,
            controls: TreeControls::default(),
            seed: 0,
            subspace: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub bootstrap: bool,
    pub m_try: Option<usize>,
    pub seeds: Vec<u64>,
    /// Out-of-bag WEPS of each tree; `None` without bootstrap or when a
    /// tree has no out-of-bag rows.
    pub oob_weps: Vec<Option<f64>>,
    /// Candidate features of each tree when a subspace was drawn.
    pub tree_features: Option<Vec<Vec<usize>>>,
    pub n_features: usize,
}

pub fn fit_forest_matrix(
    x: &DMatrix<f64>,
    categorical: &[bool],
    y: &[f64],
    w: &[f64],
    opts: &ForestOptions,
) -> Result<ForestModel> {
    let (n, p) = x.shape();
    if opts.n_trees == 0 {
        return Err(invalid("a forest needs at least one tree"));
    }
    if let Some(m) = opts.m_try {
        if m == 0 || m > p {
            return Err(invalid(format!("m_try = {m} must lie in 1..={p}")));
        }
    }
    if let Some(s) = opts.subspace {
        if s == 0 || s > p {
            return Err(invalid(format!("subspace = {s} must lie in 1..={p}")));
        }
    }
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len().min(w.len()) });
    }
    let presorted = Presorted::new(x);
    let controls = TreeControls { m_try: opts.m_try, ..opts.controls };

    let fit_one = |t: usize| -> Result<(RegressionTree, Option<f64>, Option<Vec<usize>>)> {
        let seed = opts.seed.wrapping_add(t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts: Option<Vec<u32>> = opts.bootstrap.then(|| {
            let mut c = vec![0u32; n];
            for _ in 0..n {
                c[rng.random_range(0..n)] += 1;
            }
            c
        });
        let features: Option<Vec<usize>> = opts.subspace.map(|s| {
            let mut f = sample(&mut rng, p, s).into_vec();
            f.sort_unstable();
            f
        });
        let tree_controls = match (&features, controls.m_try) {
            (Some(f), Some(m)) => TreeControls { m_try: Some(m.min(f.len())), ..controls },
            _ => controls,
        };
        let data = TreeData {
            x,
            categorical,
            y,
            w,
            counts: counts.as_deref(),
            features: features.as_deref(),
            presorted: Some(&presorted),
        };
        let tree = fit_tree_data(&data, &tree_controls, &mut rng)?;
        let oob = match &counts {
            Some(c) => {
                let rows: Vec<usize> = (0..n).filter(|&i| c[i] == 0).collect();
                if rows.is_empty() {
                    None
                } else {
                    let pred: Vec<f64> = rows
                        .iter()
                        .map(|&i| tree.nodes[tree.leaf_of(|f| x[(i, f)])].value)
                        .collect();
                    let yt: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                    let wt: Vec<f64> = rows.iter().map(|&i| w[i]).collect();
                    Some(weps(&yt, &pred, &wt)?)
                }
            }
            None => None,
        };
        Ok((tree, oob, features))
    };
    let fitted: Vec<_> = (0..opts.n_trees)
        .into_par_iter()
        .map(fit_one)
        .collect::<Result<_>>()?;
    let mut trees = Vec::with_capacity(fitted.len());
    let mut oob_weps = Vec::with_capacity(fitted.len());
    let mut tree_features = Vec::with_capacity(fitted.len());
    for (t, o, f) in fitted {
        trees.push(t);
        oob_weps.push(o);
        tree_features.push(f.unwrap_or_default());
    }
    Ok(ForestModel {
        trees,
        bootstrap: opts.bootstrap,
        m_try: opts.m_try,
        seeds: (0..opts.n_trees).map(|t| opts.seed.wrapping_add(t as u64)).collect(),
        oob_weps,
        tree_features: opts.subspace.map(|_| tree_features),
        n_features: p,
    })
}

impl ForestModel {
    /// Unweighted mean of the member trees' predictions.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let mut sum = vec![0.0; x.nrows()];
        for t in &self.trees {
            for (i, s) in sum.iter_mut().enumerate() {
                *s += t.nodes[t.leaf_of(|f| x[(i, f)])].value;
            }
        }
        let k = self.trees.len() as f64;
        Ok(sum.into_iter().map(|s| s / k).collect())
    }
}
