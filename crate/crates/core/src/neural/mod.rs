//! Feed-forward regression networks with one tanh hidden layer, trained by
//! Levenberg-Marquardt or mini-batch backpropagation.

mod backprop;
mod lm;
mod mlp;

pub use backprop::{train_backprop, BackpropOptions};
pub use lm::{lm_step, train_lm, LmOptions};
pub use mlp::{EpochLog, MlpModel};

use crate::dataset::{feature_matrix, Dataset, FeatureSpec};
use crate::error::Result;

pub fn train_lm_dataset(ds: &Dataset, features: &FeatureSpec, opts: &LmOptions) -> Result<MlpModel> {
    let fm = feature_matrix(ds, features)?;
    train_lm(&fm.matrix, ds.targets(), ds.weights(), &fm.names, opts)
}

pub fn train_backprop_dataset(ds: &Dataset, features: &FeatureSpec, opts: &BackpropOptions) -> Result<MlpModel> {
    let fm = feature_matrix(ds, features)?;
    train_backprop(&fm.matrix, ds.targets(), ds.weights(), &fm.names, opts)
}

impl MlpModel {
    /// Training log as CSV: `epoch,loss,lambda,accepted,elapsed_seconds`.
    pub fn log_csv(&self) -> String {
        let mut s = String::from("epoch,loss,lambda,accepted,elapsed_seconds\n");
        for e in &self.log {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.loss, e.lambda, e.accepted, e.elapsed_seconds
            ));
        }
        s
    }
}
