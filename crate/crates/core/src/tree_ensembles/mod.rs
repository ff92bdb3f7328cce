//! Regression trees, bagging, random forests, LS-Boost and forest-based
//! feature elimination.
//!
//! The `*_matrix` functions work on a numeric design; the dataset-level
//! wrappers build it with [`Encoding::Ordinal`](crate::dataset::Encoding)
//! style specs so trade types stay categorical.

mod boost;
mod forest;
mod ranking;
mod tree;

pub use boost::{fit_ls_boost_matrix, BoostModel, BoostOptions, BoostStage};
pub use forest::{fit_forest_matrix, ForestModel, ForestOptions};
pub use ranking::{rf_feature_ranking_matrix, FeatureRanking, FeatureScore, RankingOptions, RankingRound};
pub use tree::{
    fit_tree_data, fit_tree_matrix, Node, Presorted, PruningRecord, RegressionTree, Split, SplitRule,
    TreeControls, TreeData,
};

use crate::dataset::{feature_matrix, Dataset, FeatureSpec};
use crate::error::Result;

pub fn fit_tree(ds: &Dataset, features: &FeatureSpec, controls: &TreeControls, seed: u64) -> Result<RegressionTree> {
    let fm = feature_matrix(ds, features)?;
    fit_tree_matrix(&fm.matrix, &fm.categorical, ds.targets(), ds.weights(), controls, seed)
}

pub fn fit_forest(ds: &Dataset, features: &FeatureSpec, opts: &ForestOptions) -> Result<ForestModel> {
    let fm = feature_matrix(ds, features)?;
    fit_forest_matrix(&fm.matrix, &fm.categorical, ds.targets(), ds.weights(), opts)
}

pub fn fit_ls_boost(ds: &Dataset, features: &FeatureSpec, opts: &BoostOptions) -> Result<BoostModel> {
    let fm = feature_matrix(ds, features)?;
    fit_ls_boost_matrix(&fm.matrix, &fm.categorical, ds.targets(), ds.weights(), opts)
}

pub fn rf_feature_ranking(ds: &Dataset, features: &FeatureSpec, opts: &RankingOptions) -> Result<FeatureRanking> {
    let fm = feature_matrix(ds, features)?;
    rf_feature_ranking_matrix(&fm.matrix, &fm.categorical, &fm.names, ds.targets(), ds.weights(), opts)
}
