//! Levenberg-Marquardt training on the weighted squared error.
//!
//! Residuals are `r_i = sqrt(w_i) (y_hat_i - y_i)`, and each step solves
//! `(J^T J + lambda I) delta = -J^T r`. Targets are standardized by their
//! weighted mean and standard deviation while training and the output layer
//! is mapped back afterwards, so the damping schedule does not depend on the
//! price scale.
//!
//! For large training sets `J^T J` can be formed from a random subset of
//! rows (rescaled by total weight); the gradient and the loss used to accept
//! steps always use every row.

use super::mlp::{forward_std, sse_gradient, EpochLog, MlpModel};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Jacobian rows formed per block; blocks are summed in order.
const BLOCK_ROWS: usize = 512;
/// Blocks evaluated concurrently before being added to the total.
const PARALLEL_BLOCKS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmOptions {
    pub hidden: usize,
    pub max_epochs: usize,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Training stops once the damping exceeds this.
    pub lambda_max: f64,
    /// Stop when the largest gradient entry (per unit weight) falls below
    /// this.
    pub gradient_tolerance: f64,
    /// Stop when the step norm falls below this times the parameter norm.
    pub step_tolerance: f64,
    /// Rows used to form `J^T J`; `None` uses all of them.
    pub jacobian_rows: Option<usize>,
    pub seed: u64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            hidden: 20,
            max_epochs: 100,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e10,
            gradient_tolerance: 1e-9,
            step_tolerance: 1e-10,
            jacobian_rows: None,
            seed: 0,
        }
    }
}

pub(crate) fn target_scaling(y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let m = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let v = y.iter().zip(w).map(|(y, w)| w * (y - m) * (y - m)).sum::<f64>() / sw;
    (m, if v > 0.0 { v.sqrt() } else { 1.0 })
}

pub(crate) fn check_inputs(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<()> {
    let n = x.nrows();
    if n == 0 {
        return Err(invalid("cannot train on an empty training set"));
    }
    if y.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len().min(w.len()) });
    }
    if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("weights must be positive, got {bad}")));
    }
    Ok(())
}

/// Jacobian block for `rows`: `J_i = sqrt(w_i) d y_hat_i / d params`.
fn jacobian_block(params: &[f64], d: usize, h: usize, z: &DMatrix<f64>, w: &[f64], rows: &[usize]) -> DMatrix<f64> {
    let np = params.len();
    let w2 = &params[h * d + h..h * d + 2 * h];
    let zb = DMatrix::from_fn(rows.len(), d, |i, j| z[(rows[i], j)]);
    let (a, _) = forward_std(params, d, h, &zb);
    let mut jb = DMatrix::<f64>::zeros(rows.len(), np);
    for (i, &row) in rows.iter().enumerate() {
        let sw = w[row].sqrt();
        for k in 0..h {
            let ak = a[(i, k)];
            let g = sw * w2[k] * (1.0 - ak * ak);
            for j in 0..d {
                jb[(i, k * d + j)] = g * zb[(i, j)];
            }
            jb[(i, h * d + k)] = g;
            jb[(i, h * d + h + k)] = sw * ak;
        }
        jb[(i, h * d + 2 * h)] = sw;
    }
    jb
}

/// `scale * J^T J` over `rows`. Blocks run in parallel in groups and are
/// added in block order, so the result does not depend on the thread count.
fn jtj(params: &[f64], d: usize, h: usize, z: &DMatrix<f64>, w: &[f64], rows: &[usize], scale: f64) -> DMatrix<f64> {
    let np = params.len();
    let mut acc = DMatrix::<f64>::zeros(np, np);
    let blocks: Vec<&[usize]> = rows.chunks(BLOCK_ROWS).collect();
    for group in blocks.chunks(PARALLEL_BLOCKS) {
        let parts: Vec<DMatrix<f64>> = group
            .par_iter()
            .map(|b| {
                let jb = jacobian_block(params, d, h, z, w, b);
                jb.tr_mul(&jb)
            })
            .collect();
        for p in parts {
            acc += p * scale;
        }
    }
    acc
}

/// One damped step `delta` solving `(J^T J + lambda I) delta = -J^T r` at the
/// model's current parameters, in original target units and using every
/// row.
pub fn lm_step(model: &MlpModel, x: &DMatrix<f64>, y: &[f64], w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_inputs(x, y, w)?;
    let (d, h) = (model.input_dim(), model.hidden());
    let z = model.standardize(x)?;
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let mut a = jtj(model.params(), d, h, &z, w, &rows, 1.0);
    for k in 0..a.nrows() {
        a[(k, k)] += lambda;
    }
    let (_, grad) = sse_gradient(model.params(), d, h, &z, y, w);
    let rhs = DVector::from_iterator(grad.len(), grad.iter().map(|g| -0.5 * g));
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("damped normal matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Trains a network by Levenberg-Marquardt. Every accepted epoch lowers the
/// full training loss; the log records each epoch.
pub fn train_lm(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    names: &[String],
    opts: &LmOptions,
) -> Result<MlpModel> {
    check_inputs(x, y, w)?;
    if !(opts.lambda0 > 0.0 && opts.lambda_up > 1.0 && opts.lambda_down > 1.0) {
        return Err(invalid("LM needs lambda0 > 0 and up/down factors above 1"));
    }
    let start = Instant::now();
    let (shift, scale) = target_scaling(y, w);
    let ys: Vec<f64> = y.iter().map(|v| (v - shift) / scale).collect();
    let mut model = MlpModel::from_training(x, names, opts.hidden, 0.0, opts.seed)?;
    let (d, h) = (model.input_dim(), model.hidden());
    let z = model.standardize(x)?;
    let n = x.nrows();
    let sw: f64 = w.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4C4D);
    let mut params = model.params().to_vec();
    let (mut loss, mut grad) = sse_gradient(&params, d, h, &z, &ys, w);
    if !loss.is_finite() {
        return Err(Error::Numerical("initial training loss is not finite".into()));
    }
    let mut lambda = opts.lambda0;
    let unit = scale * scale / sw;
    let mut log = Vec::new();
    for epoch in 1..=opts.max_epochs {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) / sw;
        if gmax <= opts.gradient_tolerance {
            break;
        }
        let rows: Vec<usize> = match opts.jacobian_rows {
            Some(m) if m < n => {
                let mut r = sample(&mut rng, n, m).into_vec();
                r.sort_unstable();
                r
            }
            _ => (0..n).collect(),
        };
        let sub_w: f64 = rows.iter().map(|&i| w[i]).sum();
        let a = jtj(&params, d, h, &z, w, &rows, sw / sub_w);
        // J^T r is half the SSE gradient
        let rhs = DVector::from_iterator(grad.len(), grad.iter().map(|g| -0.5 * g));
        let mut accepted = false;
        let mut step_norm = f64::INFINITY;
        while lambda <= opts.lambda_max {
            let mut damped = a.clone();
            for k in 0..damped.nrows() {
                damped[(k, k)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= opts.lambda_up;
                continue;
            };
            let delta = chol.solve(&rhs);
            let cand: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            let (cl, cg) = sse_gradient(&cand, d, h, &z, &ys, w);
            if !cl.is_finite() {
                log::warn!("LM epoch {epoch}: non-finite candidate loss at lambda {lambda}");
            }
            if cl.is_finite() && cl < loss {
                step_norm = delta.norm();
                params = cand;
                loss = cl;
                grad = cg;
                lambda = (lambda / opts.lambda_down).max(f64::MIN_POSITIVE);
                accepted = true;
                break;
            }
            lambda *= opts.lambda_up;
        }
        log.push(EpochLog {
            epoch,
            loss: loss * unit,
            lambda,
            accepted,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        if !accepted {
            log::info!("LM stopped at epoch {epoch}: damping exceeded {}", opts.lambda_max);
            break;
        }
        let pnorm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
        if step_norm <= opts.step_tolerance * pnorm.max(1.0) {
            break;
        }
    }
    model.set_params(&params)?;
    model.unscale_output(shift, scale);
    model.log = log;
    Ok(model)
}
