//! Bond trade price prediction toolkit.
//!
//! The crate covers the full pipeline used to benchmark price predictors on
//! bond trade histories:
//!
//! * [`dataset`]: the 61-attribute trade schema, CSV I/O, a synthetic
//!   generator and exploratory profiling.
//! * [`evaluation`]: the weighted L1 error metric (WEPS), the two-model
//!   significance interval, weight-balanced splitting and the repeated
//!   hold-out driver.
//! * [`linear_models`]: weighted least squares / gamma GLMs, PCA and
//!   principal-component regression.
//! * [`tree_ensembles`]: CART regression trees, bagging, random forests,
//!   LS-Boost and forest-based feature elimination.
//! * [`timeseries`]: ACF/PACF, Dickey-Fuller and Engle-Granger tests,
//!   ARMA(1,1) estimation and the per-bond-type forecast feature.
//! * [`neural`]: a one-hidden-layer network trained by Levenberg-Marquardt
//!   or mini-batch backpropagation.
//! * [`model`]: the serializable fitted-model artifact shared by all
//!   method families.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod linear_models;
pub mod model;
pub mod neural;
pub mod timeseries;
pub mod tree_ensembles;

pub use error::{Error, Result};

/// Version tag written into every serialized artifact.
pub const SCHEMA_VERSION: &str = "bond-trades-v1";
