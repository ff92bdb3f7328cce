//! One-hidden-layer tanh network with a linear output.
//!
//! Parameters are laid out as `[W1 (H x d, row-major), b1 (H), w2 (H), b2]`.
//! Inputs are standardized with means and scales taken from the training
//! matrix when the model is created; there is no way to refit them later.

use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Weighted mean squared training error after the epoch.
    pub loss: f64,
    /// Damping in effect after the epoch (0 for backpropagation).
    pub lambda: f64,
    /// Whether the epoch changed the weights.
    pub accepted: bool,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    input_dim: usize,
    hidden: usize,
    params: Vec<f64>,
    input_means: Vec<f64>,
    input_scales: Vec<f64>,
    pub names: Vec<String>,
    pub log: Vec<EpochLog>,
}

/// Forward pass on standardized inputs: hidden activations (n x H) and
/// outputs.
pub(crate) fn forward_std(params: &[f64], d: usize, h: usize, z: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let w1 = DMatrix::from_row_slice(h, d, &params[..h * d]);
    let b1 = &params[h * d..h * d + h];
    let w2 = DVector::from_column_slice(&params[h * d + h..h * d + 2 * h]);
    let b2 = params[h * d + 2 * h];
    let mut a = z * w1.transpose();
    for (k, mut col) in a.column_iter_mut().enumerate() {
        col.apply(|v| *v = (*v + b1[k]).tanh());
    }
    let out: Vec<f64> = (&a * &w2).iter().map(|v| v + b2).collect();
    (a, out)
}

/// Weighted sum of squared errors and its gradient on standardized inputs.
pub(crate) fn sse_gradient(
    params: &[f64],
    d: usize,
    h: usize,
    z: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
) -> (f64, Vec<f64>) {
    let (a, out) = forward_std(params, d, h, z);
    let n = y.len();
    let w2 = &params[h * d + h..h * d + 2 * h];
    let mut sse = 0.0;
    let e = DVector::from_fn(n, |i, _| {
        let r = out[i] - y[i];
        sse += w[i] * r * r;
        2.0 * w[i] * r
    });
    let mut grad = vec![0.0; params.len()];
    // output layer
    let gw2 = a.tr_mul(&e);
    grad[h * d + h..h * d + 2 * h].copy_from_slice(gw2.as_slice());
    grad[h * d + 2 * h] = e.sum();
    // hidden layer: delta_ik = e_i w2_k (1 - a_ik^2)
    let mut delta = a;
    for (k, mut col) in delta.column_iter_mut().enumerate() {
        for (i, v) in col.iter_mut().enumerate() {
            *v = e[i] * w2[k] * (1.0 - *v * *v);
        }
    }
    let gw1 = delta.tr_mul(z); // H x d
    for k in 0..h {
        for j in 0..d {
            grad[k * d + j] = gw1[(k, j)];
        }
        grad[h * d + k] = delta.column(k).sum();
    }
    (sse, grad)
}

impl MlpModel {
    /// Creates a network whose input standardization comes from `x_train`,
    /// with weights drawn uniformly in `+-1/sqrt(fan_in)` and the output
    /// bias at `b2`.
    pub fn from_training(
        x_train: &DMatrix<f64>,
        names: &[String],
        hidden: usize,
        b2: f64,
        seed: u64,
    ) -> Result<Self> {
        let (n, d) = x_train.shape();
        if hidden == 0 {
            return Err(invalid("hidden width must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("cannot standardize an empty training matrix"));
        }
        if names.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: names.len() });
        }
        let mut means = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for j in 0..d {
            let c = x_train.column(j);
            let m = c.sum() / n as f64;
            let v = c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            means.push(m);
            scales.push(if v > 0.0 { v.sqrt() } else { 1.0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = 1.0 / (d.max(1) as f64).sqrt();
        let r2 = 1.0 / (hidden as f64).sqrt();
        let mut params = Vec::with_capacity(hidden * (d + 2) + 1);
        for _ in 0..hidden * d + hidden {
            params.push(rng.random_range(-r1..=r1));
        }
        for _ in 0..hidden {
            params.push(rng.random_range(-r2..=r2));
        }
        params.push(b2);
        Ok(MlpModel {
            input_dim: d,
            hidden,
            params,
            input_means: means,
            input_scales: scales,
            names: names.to_vec(),
            log: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// `H (d + 1) + (H + 1)`
    pub fn n_params(&self) -> usize {
        self.hidden * (self.input_dim + 1) + self.hidden + 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn input_means(&self) -> &[f64] {
        &self.input_means
    }

    pub fn input_scales(&self) -> &[f64] {
        &self.input_scales
    }

    pub fn standardize(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.ncols(),
            });
        }
        let mut z = x.clone();
        for (j, mut col) in z.column_iter_mut().enumerate() {
            let (m, s) = (self.input_means[j], self.input_scales[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        Ok(z)
    }

    /// `w2 . tanh(W1 z + b1) + b2` on standardized rows `z`.
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let z = self.standardize(x)?;
        Ok(forward_std(&self.params, self.input_dim, self.hidden, &z).1)
    }

    /// Gradient of `sum_i w_i (y_hat_i - y_i)^2` with respect to the
    /// parameters, in [`MlpModel::params`] order.
    pub fn gradient(&self, x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        if y.len() != x.nrows() || w.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len().min(w.len()),
            });
        }
        let z = self.standardize(x)?;
        Ok(sse_gradient(&self.params, self.input_dim, self.hidden, &z, y, w).1)
    }

    /// Maps output-layer weights trained on `(y - shift) / scale` back to
    /// the original target units.
    pub(crate) fn unscale_output(&mut self, shift: f64, scale: f64) {
        let (h, d) = (self.hidden, self.input_dim);
        for v in &mut self.params[h * d + h..h * d + 2 * h] {
            *v *= scale;
        }
        let b2 = &mut self.params[h * d + 2 * h];
        *b2 = *b2 * scale + shift;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    fn train_x() -> DMatrix<f64> {
        DMatrix::from_fn(12, 3, |i, j| ((i * 3 + j * 7) as f64 * 0.41).sin() * (j + 1) as f64)
    }

    #[test]
    fn zero_weights_predict_output_bias() {
        let x = train_x();
        let mut m = MlpModel::from_training(&x, &names(3), 4, 0.0, 1).unwrap();
        let mut p = vec![0.0; m.n_params()];
        *p.last_mut().unwrap() = 2.5;
        m.set_params(&p).unwrap();
        assert!(m.forward(&x).unwrap().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn parameter_count() {
        let m = MlpModel::from_training(&train_x(), &names(3), 5, 0.0, 1).unwrap();
        assert_eq!(m.n_params(), 5 * 4 + 6);
        assert_eq!(m.params().len(), m.n_params());
    }

    #[test]
    fn small_inputs_are_nearly_linear() {
        let x = train_x();
        let mut m = MlpModel::from_training(&x, &names(3), 1, 0.0, 1).unwrap();
        // H = 1, w2 = 1, biases 0
        m.set_params(&[0.3, -0.2, 0.1, 0.0, 1.0, 0.0]).unwrap();
        let tiny = DMatrix::from_fn(4, 3, |i, j| {
            m.input_means()[j] + 1e-4 * m.input_scales()[j] * ((i + j) as f64 - 2.0)
        });
        let z = m.standardize(&tiny).unwrap();
        let out = m.forward(&tiny).unwrap();
        for i in 0..4 {
            let lin = 0.3 * z[(i, 0)] - 0.2 * z[(i, 1)] + 0.1 * z[(i, 2)];
            assert!((out[i] - lin).abs() < 1e-10);
        }
    }

    #[test]
    fn standardization_comes_from_training_matrix() {
        let x = train_x();
        let m = MlpModel::from_training(&x, &names(3), 2, 0.0, 1).unwrap();
        let z = m.standardize(&x).unwrap();
        for j in 0..3 {
            assert!(z.column(j).sum().abs() < 1e-12);
        }
        assert!(m.forward(&DMatrix::zeros(2, 4)).is_err());
    }
}
