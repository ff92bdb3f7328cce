//! Error metric, weight-balanced splits, repeated hold-out runs and the
//! significance interval used to compare two models.

mod cv;
mod metrics;
mod split;

pub use cv::{run_cv, CvInstance, CvOptions, CvResult, CvRun, Predictor};
pub use metrics::{significance_interval, weps, SignificanceInterval, Z_95};
pub use split::{
    ks_distance, weight_balanced_split, SplitPair, DEFAULT_TRAIN_FRACTION, N_STRATA,
};
