//! Principal component analysis by eigendecomposition of the sample
//! covariance (or correlation) matrix.

use crate::error::{invalid, Error, Result};
use crate::linalg::RANK_TOLERANCE;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaTransform {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Column standard deviations when standardized, otherwise ones.
    pub scales: Vec<f64>,
    pub standardized: bool,
    /// `loadings[c]` is the unit eigenvector of component `c`.
    pub loadings: Vec<Vec<f64>>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Components whose eigenvalue exceeds `max eigenvalue * 1e-10`.
    pub retained: usize,
}

fn sign_normalize(v: &mut [f64]) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn fit_pca(x: &DMatrix<f64>, standardize: bool, names: &[String]) -> Result<PcaTransform> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(invalid("PCA needs at least 2 rows"));
    }
    if p == 0 {
        return Err(invalid("PCA needs at least one column"));
    }
    if names.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: names.len() });
    }
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let mut centered = x.clone();
    for j in 0..p {
        centered.column_mut(j).add_scalar_mut(-means[j]);
    }
    let scales: Vec<f64> = if standardize {
        let mut s = Vec::with_capacity(p);
        for j in 0..p {
            let sd = (centered.column(j).norm_squared() / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(invalid(format!(
                    "column {} is constant and cannot be standardized",
                    names[j]
                )));
            }
            centered.column_mut(j).unscale_mut(sd);
            s.push(sd);
        }
        s
    } else {
        vec![1.0; p]
    };
    let cov = centered.tr_mul(&centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut comps: Vec<(f64, Vec<f64>)> = (0..p)
        .map(|c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            sign_normalize(&mut v);
            (eig.eigenvalues[c], v)
        })
        .collect();
    let top = comps.iter().fold(0.0f64, |m, c| m.max(c.0.abs()));
    let tie = top * 1e-12;
    comps.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= tie {
            // equal eigenvalues: order the (sign-fixed) vectors lexicographically
            for (u, v) in a.1.iter().zip(&b.1) {
                match v.total_cmp(u) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        } else {
            b.0.total_cmp(&a.0)
        }
    });
    let eigenvalues: Vec<f64> = comps.iter().map(|c| c.0).collect();
    let retained = eigenvalues
        .iter()
        .filter(|&&l| l > top * RANK_TOLERANCE)
        .count();
    Ok(PcaTransform {
        names: names.to_vec(),
        means,
        scales,
        standardized: standardize,
        loadings: comps.into_iter().map(|c| c.1).collect(),
        eigenvalues,
        retained,
    })
}

impl PcaTransform {
    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    /// Centered (and scaled) copy of `x`.
    pub fn normalize(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        let mut z = x.clone();
        for j in 0..z.ncols() {
            let (m, s) = (self.means[j], self.scales[j]);
            z.column_mut(j).apply(|v| *v = (*v - m) / s);
        }
        Ok(z)
    }

    /// Scores on the listed components, in the listed order.
    pub fn scores(&self, x: &DMatrix<f64>, components: &[usize]) -> Result<DMatrix<f64>> {
        if let Some(&c) = components.iter().find(|&&c| c >= self.retained) {
            return Err(invalid(format!(
                "component {c} out of range, {} retained",
                self.retained
            )));
        }
        let z = self.normalize(x)?;
        let p = self.n_features();
        let l = DMatrix::from_fn(p, components.len(), |i, c| self.loadings[components[c]][i]);
        Ok(z * l)
    }

    /// Scores on the first `k` components.
    pub fn apply(&self, x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        if k > self.retained {
            return Err(invalid(format!("k = {k} exceeds the {} retained components", self.retained)));
        }
        self.scores(x, &(0..k).collect::<Vec<_>>())
    }

    /// Maps scores on the first `k` components back to the original
    /// feature space.
    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let k = scores.ncols();
        let p = self.n_features();
        let l = DMatrix::from_fn(p, k, |i, c| self.loadings[c][i]);
        let mut x = scores * l.transpose();
        for j in 0..p {
            let (m, s) = (self.means[j], self.scales[j]);
            x.column_mut(j).apply(|v| *v = *v * s + m);
        }
        x
    }
}

/// Projects `x` onto the first `k` components of `t`.
pub fn apply_pca(t: &PcaTransform, x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    t.apply(x, k)
}
