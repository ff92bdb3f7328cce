//! Method-agnostic training entry point and the fitted-model artifact.
//!
//! A [`TrainSpec`] names a method family with its hyperparameters, the
//! feature view and whether the bond-type ARMA forecast column is added.
//! [`fit`] turns it into a [`ModelArtifact`], which predicts on raw datasets
//! and serializes to JSON.

use crate::dataset::{feature_matrix, Dataset, FeatureSpec};
use crate::error::{invalid, Result};
use crate::evaluation::Predictor;
use crate::linear_models::{fit_glm, fit_pcr_matrix, GlmModel, Link, PcrModel, PcrOptions};
use crate::neural::{train_backprop, train_lm, BackpropOptions, LmOptions, MlpModel};
use crate::timeseries::{augment_with_ts_feature, build_group_arma_table, GroupArmaTable, DEFAULT_SAMPLES_PER_GROUP};
use crate::tree_ensembles::{
    fit_forest_matrix, fit_ls_boost_matrix, fit_tree_matrix, BoostModel, BoostOptions, ForestModel, ForestOptions,
    RegressionTree, TreeControls,
};
use crate::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MethodSpec {
    /// Least squares (identity link) or gamma GLM, optionally weighted by
    /// the evaluation weights.
    Glm { link: Link, weighted: bool },
    Pcr(PcrOptions),
    Tree {
        controls: TreeControls,
        seed: u64,
    },
    /// Bagging when `m_try` is unset, random forest otherwise.
    Forest(ForestOptions),
    Boost(BoostOptions),
    MlpLm(LmOptions),
    MlpBackprop(BackpropOptions),
}

impl MethodSpec {
    pub fn ols() -> Self {
        MethodSpec::Glm {
            link: Link::Identity,
            weighted: false,
        }
    }

    pub fn wls() -> Self {
        MethodSpec::Glm {
            link: Link::Identity,
            weighted: true,
        }
    }

    /// Short family label used in result tables.
    pub fn family(&self) -> &'static str {
        match self {
            MethodSpec::Glm { link: Link::Identity, weighted: false } => "ols",
            MethodSpec::Glm { link: Link::Identity, weighted: true } => "wls",
            MethodSpec::Glm { .. } => "gamma_glm",
            MethodSpec::Pcr(_) => "pcr",
            MethodSpec::Tree { .. } => "tree",
            MethodSpec::Forest(o) if o.m_try.is_none() => "bagging",
            MethodSpec::Forest(_) => "random_forest",
            MethodSpec::Boost(_) => "ls_boost",
            MethodSpec::MlpLm(_) => "mlp_lm",
            MethodSpec::MlpBackprop(_) => "mlp_backprop",
        }
    }
}

/// Settings for the per-bond-type ARMA forecast column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsAugment {
    pub samples_per_group: usize,
    pub seed: u64,
}

impl Default for TsAugment {
    fn default() -> Self {
        TsAugment {
            samples_per_group: DEFAULT_SAMPLES_PER_GROUP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub method: MethodSpec,
    pub features: FeatureSpec,
    /// Build the ARMA table on the training rows and append its forecast.
    pub ts_augment: Option<TsAugment>,
}

impl TrainSpec {
    pub fn new(method: MethodSpec, features: FeatureSpec) -> Self {
        TrainSpec {
            method,
            features,
            ts_augment: None,
        }
    }

    pub fn with_ts_augment(mut self, ts: TsAugment) -> Self {
        self.ts_augment = Some(ts);
        self
    }

    /// Label combining family and the ARMA feature flag.
    pub fn label(&self) -> String {
        match self.ts_augment {
            Some(_) => format!("{}+arma", self.method.family()),
            None => self.method.family().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Glm(GlmModel),
    Pcr(PcrModel),
    Tree(RegressionTree),
    Forest(ForestModel),
    Boost(BoostModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: String,
    pub family: String,
    pub spec: TrainSpec,
    /// Trainer wall time, including the ARMA table when one is built.
    pub fit_seconds: f64,
    pub feature_names: Vec<String>,
    pub ts_table: Option<GroupArmaTable>,
    pub model: FittedModel,
}

/// Fits `spec` on `train`. Every transform (ARMA table, PCA, network
/// standardization) is estimated from `train` alone.
pub fn fit(train: &Dataset, spec: &TrainSpec) -> Result<ModelArtifact> {
    if train.is_empty() {
        return Err(invalid("cannot fit on an empty training set"));
    }
    let start = Instant::now();
    let (ts_table, augmented) = match &spec.ts_augment {
        Some(ts) => {
            let table = build_group_arma_table(train, ts.samples_per_group, ts.seed)?;
            let (ds, _) = augment_with_ts_feature(train, &table)?;
            (Some(table), Some(ds))
        }
        None => (None, None),
    };
    let ds = augmented.as_ref().unwrap_or(train);
    let fm = feature_matrix(ds, &spec.features)?;
    let (x, y, w) = (&fm.matrix, ds.targets(), ds.weights());
    let model = match &spec.method {
        MethodSpec::Glm { link, weighted } => {
            FittedModel::Glm(fit_glm(x, y, weighted.then_some(w), *link, &fm.names)?)
        }
        MethodSpec::Pcr(o) => FittedModel::Pcr(fit_pcr_matrix(x, y, w, &fm.names, o)?),
        MethodSpec::Tree { controls, seed } => {
            FittedModel::Tree(fit_tree_matrix(x, &fm.categorical, y, w, controls, *seed)?)
        }
        MethodSpec::Forest(o) => FittedModel::Forest(fit_forest_matrix(x, &fm.categorical, y, w, o)?),
        MethodSpec::Boost(o) => FittedModel::Boost(fit_ls_boost_matrix(x, &fm.categorical, y, w, o)?),
        MethodSpec::MlpLm(o) => FittedModel::Mlp(train_lm(x, y, w, &fm.names, o)?),
        MethodSpec::MlpBackprop(o) => FittedModel::Mlp(train_backprop(x, y, w, &fm.names, o)?),
    };
    Ok(ModelArtifact {
        schema_version: SCHEMA_VERSION.to_string(),
        family: spec.method.family().to_string(),
        spec: spec.clone(),
        fit_seconds: start.elapsed().as_secs_f64(),
        feature_names: fm.names,
        ts_table,
        model,
    })
}

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: ModelArtifact = serde_json::from_str(s)?;
        if a.schema_version != SCHEMA_VERSION {
            return Err(crate::Error::Schema(format!(
                "artifact schema {} does not match {SCHEMA_VERSION}",
                a.schema_version
            )));
        }
        Ok(a)
    }
}

impl Predictor for ModelArtifact {
    fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let augmented = match &self.ts_table {
            Some(t) => Some(augment_with_ts_feature(ds, t)?.0),
            None => None,
        };
        let ds = augmented.as_ref().unwrap_or(ds);
        let fm = feature_matrix(ds, &self.spec.features)?;
        if fm.names != self.feature_names {
            return Err(invalid("prediction dataset yields different feature columns than training"));
        }
        let x = &fm.matrix;
        match &self.model {
            FittedModel::Glm(m) => m.predict(x),
            FittedModel::Pcr(m) => m.predict(x),
            FittedModel::Tree(m) => m.predict(x),
            FittedModel::Forest(m) => m.predict(x),
            FittedModel::Boost(m) => m.predict(x),
            FittedModel::Mlp(m) => m.forward(x),
        }
    }
}

/// `fit` as a cross-validation trainer.
pub fn trainer(spec: &TrainSpec) -> impl Fn(&Dataset) -> Result<ModelArtifact> + Sync + '_ {
    move |ds| fit(ds, spec)
}
