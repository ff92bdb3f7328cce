//! Repeated weight-balanced hold-out evaluation.
//!
//! Instance `i` splits with seed `base_seed + i`, fits the trainer on the
//! training rows, and records train/test WEPS and the wall time of the fit
//! alone. Failed instances are kept in the result with their error.

use super::metrics::weps;
use super::split::{weight_balanced_split, DEFAULT_TRAIN_FRACTION};
use crate::dataset::Dataset;
use crate::error::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Anything that predicts trade prices for a dataset.
pub trait Predictor {
    fn predict(&self, ds: &Dataset) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub n_instances: usize,
    pub base_seed: u64,
    pub train_fraction: f64,
    /// Run instances on the rayon pool; results are ordered by instance.
    pub parallel: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            n_instances: 5,
            base_seed: 0,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvInstance {
    pub index: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub ks_distance: f64,
    pub stratified: bool,
    pub train_weps: Option<f64>,
    pub test_weps: Option<f64>,
    pub fit_seconds: Option<f64>,
    pub error: Option<String>,
}

impl CvInstance {
    pub fn completed(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: String,
    pub hyperparameters: serde_json::Value,
    pub instances: Vec<CvInstance>,
    /// Means over completed instances; `None` if every instance failed.
    pub mean_train_weps: Option<f64>,
    pub mean_test_weps: Option<f64>,
    pub mean_fit_seconds: Option<f64>,
    pub failed_instances: usize,
}

impl CvResult {
    fn assemble(method: &str, hyperparameters: serde_json::Value, instances: Vec<CvInstance>) -> Self {
        let done: Vec<&CvInstance> = instances.iter().filter(|i| i.completed()).collect();
        let mean = |f: &dyn Fn(&CvInstance) -> Option<f64>| {
            if done.is_empty() {
                None
            } else {
                Some(done.iter().map(|i| f(i).unwrap_or(f64::NAN)).sum::<f64>() / done.len() as f64)
            }
        };
        CvResult {
            method: method.to_string(),
            hyperparameters,
            mean_train_weps: mean(&|i| i.train_weps),
            mean_test_weps: mean(&|i| i.test_weps),
            mean_fit_seconds: mean(&|i| i.fit_seconds),
            failed_instances: instances.len() - done.len(),
            instances,
        }
    }

    /// Test-set size shared by all instances, if it is shared.
    pub fn common_test_size(&self) -> Option<usize> {
        let first = self.instances.first()?.n_test;
        self.instances.iter().all(|i| i.n_test == first).then_some(first)
    }
}

/// Result of [`run_cv`] together with the model fitted on instance 0.
pub struct CvRun<M> {
    pub result: CvResult,
    pub first_model: Option<M>,
}

pub fn run_cv<M, F>(
    ds: &Dataset,
    trainer: F,
    options: &CvOptions,
    method: &str,
    hyperparameters: serde_json::Value,
) -> Result<CvRun<M>>
where
    M: Predictor + Send,
    F: Fn(&Dataset) -> Result<M> + Sync,
{
    if options.n_instances == 0 {
        return Err(crate::error::invalid("n_instances must be at least 1"));
    }
    let one = |i: usize| -> Result<(CvInstance, Option<M>)> {
        let seed = options.base_seed.wrapping_add(i as u64);
        let split = weight_balanced_split(ds.weights(), options.train_fraction, seed)?;
        let train = ds.subset(&split.train_indices);
        let test = ds.subset(&split.test_indices);
        let mut inst = CvInstance {
            index: i,
            seed,
            n_train: train.len(),
            n_test: test.len(),
            ks_distance: split.ks_distance,
            stratified: split.stratified,
            train_weps: None,
            test_weps: None,
            fit_seconds: None,
            error: None,
        };
        let start = Instant::now();
        let fitted = trainer(&train);
        let elapsed = start.elapsed().as_secs_f64();
        let evaluated = fitted.and_then(|m| {
            let tr = weps(train.targets(), &m.predict(&train)?, train.weights())?;
            let te = weps(test.targets(), &m.predict(&test)?, test.weights())?;
            Ok((m, tr, te))
        });
        match evaluated {
            Ok((m, tr, te)) => {
                inst.train_weps = Some(tr);
                inst.test_weps = Some(te);
                inst.fit_seconds = Some(elapsed);
                Ok((inst, (i == 0).then_some(m)))
            }
            Err(e) => {
                log::warn!("{method}: instance {i} failed: {e}");
                inst.error = Some(e.to_string());
                Ok((inst, None))
            }
        }
    };
    let runs: Vec<(CvInstance, Option<M>)> = if options.parallel {
        (0..options.n_instances)
            .into_par_iter()
            .map(one)
            .collect::<Result<_>>()?
    } else {
        (0..options.n_instances).map(one).collect::<Result<_>>()?
    };
    let mut first_model = None;
    let mut instances = Vec::with_capacity(runs.len());
    for (inst, m) in runs {
        if m.is_some() {
            first_model = m;
        }
        instances.push(inst);
    }
    Ok(CvRun {
        result: CvResult::assemble(method, hyperparameters, instances),
        first_model,
    })
}
