//! Mini-batch gradient descent on the weighted squared error.

use super::lm::{check_inputs, target_scaling};
use super::mlp::{sse_gradient, EpochLog, MlpModel};
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackpropOptions {
    pub hidden: usize,
    pub epochs: usize,
    /// Step size applied to the batch gradient divided by the batch weight.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Train on `(y - mean) / sd` and map the output layer back afterwards.
    pub standardize_target: bool,
}

impl Default for BackpropOptions {
    fn default() -> Self {
        BackpropOptions {
            hidden: 20,
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 256,
            seed: 0,
            standardize_target: true,
        }
    }
}

/// Trains by shuffled mini-batch descent. Batch order comes from the seed
/// only; the log holds the full-data loss after every epoch.
pub fn train_backprop(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    names: &[String],
    opts: &BackpropOptions,
) -> Result<MlpModel> {
    check_inputs(x, y, w)?;
    if opts.batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    if !(opts.learning_rate >= 0.0 && opts.learning_rate.is_finite()) {
        return Err(invalid(format!("learning rate must be non-negative, got {}", opts.learning_rate)));
    }
    let start = Instant::now();
    let (shift, scale) = if opts.standardize_target {
        target_scaling(y, w)
    } else {
        (0.0, 1.0)
    };
    let ys: Vec<f64> = y.iter().map(|v| (v - shift) / scale).collect();
    let mut model = MlpModel::from_training(x, names, opts.hidden, 0.0, opts.seed)?;
    let (d, h) = (model.input_dim(), model.hidden());
    let z = model.standardize(x)?;
    let n = x.nrows();
    let sw: f64 = w.iter().sum();
    let unit = scale * scale / sw;
    let mut params = model.params().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4250);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(opts.epochs);
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let zb = DMatrix::from_fn(batch.len(), d, |i, j| z[(batch[i], j)]);
            let yb: Vec<f64> = batch.iter().map(|&i| ys[i]).collect();
            let wb: Vec<f64> = batch.iter().map(|&i| w[i]).collect();
            let bw: f64 = wb.iter().sum();
            let (_, g) = sse_gradient(&params, d, h, &zb, &yb, &wb);
            let step = opts.learning_rate / bw;
            for (p, g) in params.iter_mut().zip(&g) {
                *p -= step * g;
            }
        }
        let (loss, _) = sse_gradient(&params, d, h, &z, &ys, w);
        if !loss.is_finite() {
            log::error!("backpropagation diverged at epoch {epoch} (learning rate {})", opts.learning_rate);
            return Err(Error::Numerical(format!(
                "backpropagation diverged at epoch {epoch}"
            )));
        }
        log.push(EpochLog {
            epoch,
            loss: loss * unit,
            lambda: 0.0,
            accepted: opts.learning_rate > 0.0,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    model.set_params(&params)?;
    model.unscale_output(shift, scale);
    model.log = log;
    Ok(model)
}
