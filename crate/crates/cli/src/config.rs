//! Flat experiment configuration.
//!
//! One TOML file describes one experiment: where the data comes from, which
//! method family runs with which hyperparameters, the feature view and the
//! cross-validation settings. Unknown keys are rejected, and so are keys
//! that do not apply to the chosen method.

use crate::error::CliError;
use bondlearn::dataset::{generate_synthetic, load_csv, Dataset, Encoding, FeatureSpec, SyntheticConfig};
use bondlearn::evaluation::CvOptions;
use bondlearn::linear_models::{ComponentSelection, Link, PcrOptions};
use bondlearn::model::{MethodSpec, TrainSpec, TsAugment};
use bondlearn::neural::{BackpropOptions, LmOptions};
use bondlearn::timeseries::{DEFAULT_SAMPLES_PER_GROUP, TS_FEATURE};
use bondlearn::tree_ensembles::{BoostOptions, ForestOptions, RankingOptions, TreeControls};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DEFAULT_RECORDS: usize = 100_000;
pub const DEFAULT_BOND_TYPES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Wls,
    Gamma,
    GammaLog,
    Pcr,
    Tree,
    Bagging,
    RandomForest,
    LsBoost,
    MlpLm,
    MlpBackprop,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Wls => "wls",
            Method::Gamma => "gamma",
            Method::GammaLog => "gamma_log",
            Method::Pcr => "pcr",
            Method::Tree => "tree",
            Method::Bagging => "bagging",
            Method::RandomForest => "random_forest",
            Method::LsBoost => "ls_boost",
            Method::MlpLm => "mlp_lm",
            Method::MlpBackprop => "mlp_backprop",
        }
    }

    fn is_linear(self) -> bool {
        matches!(self, Method::Ols | Method::Wls | Method::Gamma | Method::GammaLog | Method::Pcr)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Trade CSV; when absent a synthetic dataset is generated.
    pub data_path: Option<PathBuf>,
    /// Reject the whole file on any invalid row (default) or drop such rows.
    pub strict: Option<bool>,
    pub synthetic_records: Option<usize>,
    pub synthetic_bond_types: Option<usize>,
    /// Defaults to `seed`.
    pub synthetic_seed: Option<u64>,
    pub spread_signal: Option<bool>,
    pub nonlinear_scale: Option<f64>,
    pub noise_sd: Option<f64>,

    pub method: Option<Method>,
    /// Row label in the results table; defaults to the method name with
    /// suffixes for the feature policy.
    pub label: Option<String>,
    pub seed: Option<u64>,
    pub cv_instances: Option<usize>,
    pub train_fraction: Option<f64>,
    pub parallel_instances: Option<bool>,
    pub out_dir: Option<PathBuf>,

    pub encoding: Option<Encoding>,
    pub columns: Option<Vec<String>>,
    pub include_bond_type_id: Option<bool>,
    pub include_row_id: Option<bool>,
    pub ts_augment: Option<bool>,
    pub ts_samples_per_group: Option<usize>,

    pub weighted: Option<bool>,
    pub pca_k: Option<usize>,
    pub pca_selection: Option<ComponentSelection>,
    pub pca_standardize: Option<bool>,

    pub max_depth: Option<usize>,
    pub min_samples_split: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub max_leaves: Option<usize>,
    pub m_try: Option<usize>,
    pub ccp_alpha: Option<f64>,
    pub n_trees: Option<usize>,
    pub bootstrap: Option<bool>,
    pub subspace: Option<usize>,
    pub n_stages: Option<usize>,
    pub terminal_nodes: Option<usize>,
    pub shrinkage: Option<f64>,

    pub appearance_threshold: Option<f64>,
    pub drop_fraction: Option<f64>,
    pub target_count: Option<usize>,

    pub hidden: Option<usize>,
    pub max_epochs: Option<usize>,
    pub lambda0: Option<f64>,
    pub lambda_up: Option<f64>,
    pub lambda_down: Option<f64>,
    pub jacobian_rows: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("seed is required (config key `seed` or --seed)".into()))
    }

    pub fn method(&self) -> Result<Method, CliError> {
        self.method
            .ok_or_else(|| CliError::Usage("config key `method` is required".into()))
    }

    pub fn synthetic_config(&self) -> Result<SyntheticConfig, CliError> {
        let mut cfg = SyntheticConfig::new(
            self.synthetic_records.unwrap_or(DEFAULT_RECORDS),
            self.synthetic_bond_types.unwrap_or(DEFAULT_BOND_TYPES),
            match self.synthetic_seed {
                Some(s) => s,
                None => self.seed()?,
            },
        );
        if let Some(v) = self.spread_signal {
            cfg.spread_signal = v;
        }
        if let Some(v) = self.nonlinear_scale {
            cfg.nonlinear_scale = v;
        }
        if let Some(v) = self.noise_sd {
            cfg.noise_sd = v;
        }
        Ok(cfg)
    }

    pub fn load_data(&self) -> Result<Dataset, CliError> {
        match &self.data_path {
            Some(path) => {
                let synthetic = [
                    ("synthetic_records", self.synthetic_records.is_some()),
                    ("synthetic_bond_types", self.synthetic_bond_types.is_some()),
                    ("synthetic_seed", self.synthetic_seed.is_some()),
                    ("spread_signal", self.spread_signal.is_some()),
                    ("nonlinear_scale", self.nonlinear_scale.is_some()),
                    ("noise_sd", self.noise_sd.is_some()),
                ];
                if let Some((key, _)) = synthetic.iter().find(|(_, set)| *set) {
                    return Err(CliError::Usage(format!("`{key}` cannot be combined with data_path")));
                }
                let (ds, report) = load_csv(path, self.strict.unwrap_or(true))?;
                if report.rows_dropped > 0 {
                    log::warn!("dropped {} invalid rows from {}", report.rows_dropped, path.display());
                }
                Ok(ds)
            }
            None => Ok(generate_synthetic(&self.synthetic_config()?)?),
        }
    }

    pub fn features(&self) -> FeatureSpec {
        let method = self.method.unwrap_or(Method::Wls);
        FeatureSpec {
            // codes 2/3/4 for learners that can split or bend on them
            encoding: self.encoding.unwrap_or(if method.is_linear() {
                Encoding::OneHot
            } else {
                Encoding::Ordinal
            }),
            include_row_id: self.include_row_id.unwrap_or(false),
            include_bond_type_id: self.include_bond_type_id.unwrap_or(false),
            columns: self.columns.clone(),
        }
    }

    pub fn cv_options(&self) -> Result<CvOptions, CliError> {
        Ok(CvOptions {
            n_instances: self.cv_instances.unwrap_or(5),
            base_seed: self.seed()?,
            train_fraction: self.train_fraction.unwrap_or(0.70),
            parallel: self.parallel_instances.unwrap_or(false),
        })
    }

    pub fn ranking_options(&self) -> Result<RankingOptions, CliError> {
        let mut o = RankingOptions::default();
        if let Some(v) = self.appearance_threshold {
            o.appearance_threshold = v;
        }
        if let Some(v) = self.drop_fraction {
            o.drop_fraction = v;
        }
        if let Some(v) = self.target_count {
            o.target_count = v;
        }
        if let Some(v) = self.n_trees {
            o.forest.n_trees = v;
        }
        if let Some(v) = self.subspace {
            o.forest.subspace = Some(v);
        }
        if let Some(v) = self.min_samples_leaf {
            o.forest.controls.min_samples_leaf = v;
        }
        if let Some(v) = self.max_depth {
            o.forest.controls.max_depth = Some(v);
        }
        o.forest.seed = self.seed()?;
        Ok(o)
    }

    /// Results-table label.
    pub fn label(&self) -> Result<String, CliError> {
        if let Some(l) = &self.label {
            return Ok(l.clone());
        }
        let method = self.method()?;
        let mut label = method.name().to_string();
        if method == Method::Pcr {
            label.push_str(&format!("_k{}", self.pca_k.unwrap_or(PcrOptions::default().k)));
        }
        if let Some(cols) = &self.columns {
            label.push_str(&format!("_{}f", cols.len()));
        }
        if self.include_bond_type_id == Some(true) {
            label.push_str("+bond_id");
        }
        if self.ts_augment == Some(true) {
            label.push_str("+arma");
        }
        Ok(label)
    }

    /// Keys that only some families accept, with the families that do.
    fn check_applicable(&self, method: Method) -> Result<(), CliError> {
        use Method::*;
        let tree_controls = [Tree, Bagging, RandomForest];
        let forest = [Bagging, RandomForest];
        let checks: [(&str, bool, &[Method]); 23] = [
            ("weighted", self.weighted.is_some(), &[Gamma, GammaLog, Pcr]),
            ("pca_k", self.pca_k.is_some(), &[Pcr]),
            ("pca_selection", self.pca_selection.is_some(), &[Pcr]),
            ("pca_standardize", self.pca_standardize.is_some(), &[Pcr]),
            ("max_depth", self.max_depth.is_some(), &tree_controls),
            ("min_samples_split", self.min_samples_split.is_some(), &tree_controls),
            ("min_samples_leaf", self.min_samples_leaf.is_some(), &[Tree, Bagging, RandomForest, LsBoost]),
            ("max_leaves", self.max_leaves.is_some(), &tree_controls),
            ("m_try", self.m_try.is_some(), &[Tree, RandomForest]),
            ("ccp_alpha", self.ccp_alpha.is_some(), &[Tree]),
            ("n_trees", self.n_trees.is_some(), &forest),
            ("bootstrap", self.bootstrap.is_some(), &forest),
            ("subspace", self.subspace.is_some(), &forest),
            ("n_stages", self.n_stages.is_some(), &[LsBoost]),
            ("terminal_nodes", self.terminal_nodes.is_some(), &[LsBoost]),
            ("shrinkage", self.shrinkage.is_some(), &[LsBoost]),
            ("hidden", self.hidden.is_some(), &[MlpLm, MlpBackprop]),
            ("max_epochs", self.max_epochs.is_some(), &[MlpLm]),
            ("lambda0", self.lambda0.is_some(), &[MlpLm]),
            ("jacobian_rows", self.jacobian_rows.is_some(), &[MlpLm]),
            ("epochs", self.epochs.is_some(), &[MlpBackprop]),
            ("learning_rate", self.learning_rate.is_some(), &[MlpBackprop]),
            ("batch_size", self.batch_size.is_some(), &[MlpBackprop]),
        ];
        for (key, set, allowed) in checks {
            if set && !allowed.contains(&method) {
                return Err(CliError::Usage(format!("`{key}` does not apply to method {}", method.name())));
            }
        }
        for (key, set) in [("lambda_up", self.lambda_up.is_some()), ("lambda_down", self.lambda_down.is_some())] {
            if set && method != MlpLm {
                return Err(CliError::Usage(format!("`{key}` does not apply to method {}", method.name())));
            }
        }
        Ok(())
    }

    pub fn train_spec(&self) -> Result<TrainSpec, CliError> {
        let method = self.method()?;
        let seed = self.seed()?;
        self.check_applicable(method)?;
        let controls = TreeControls {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split.unwrap_or(2),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(1),
            max_leaves: self.max_leaves,
            m_try: if method == Method::Tree { self.m_try } else { None },
            ccp_alpha: self.ccp_alpha.unwrap_or(0.0),
        };
        let spec = match method {
            Method::Ols => MethodSpec::ols(),
            Method::Wls => MethodSpec::wls(),
            Method::Gamma | Method::GammaLog => MethodSpec::Glm {
                link: if method == Method::Gamma { Link::GammaInverse } else { Link::GammaLog },
                weighted: self.weighted.unwrap_or(true),
            },
            Method::Pcr => MethodSpec::Pcr(PcrOptions {
                k: self.pca_k.unwrap_or(PcrOptions::default().k),
                weighted: self.weighted.unwrap_or(true),
                standardize: self.pca_standardize.unwrap_or(true),
                selection: self.pca_selection.unwrap_or_default(),
            }),
            Method::Tree => MethodSpec::Tree { controls, seed },
            Method::Bagging | Method::RandomForest => {
                let m_try = match method {
                    Method::Bagging => None,
                    _ => Some(self.m_try.ok_or_else(|| CliError::Usage("random_forest needs `m_try`".into()))?),
                };
                MethodSpec::Forest(ForestOptions {
                    n_trees: self.n_trees.unwrap_or(100),
                    m_try,
                    bootstrap: self.bootstrap.unwrap_or(true),
                    controls,
                    seed,
                    subspace: self.subspace,
                })
            }
            Method::LsBoost => {
                let d = BoostOptions::default();
                MethodSpec::Boost(BoostOptions {
                    n_stages: self.n_stages.unwrap_or(d.n_stages),
                    j: self.terminal_nodes.unwrap_or(d.j),
                    shrinkage: self.shrinkage.unwrap_or(d.shrinkage),
                    min_samples_leaf: self.min_samples_leaf.unwrap_or(d.min_samples_leaf),
                    seed,
                })
            }
            Method::MlpLm => {
                let d = LmOptions::default();
                MethodSpec::MlpLm(LmOptions {
                    hidden: self.hidden.unwrap_or(d.hidden),
                    max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
                    lambda0: self.lambda0.unwrap_or(d.lambda0),
                    lambda_up: self.lambda_up.unwrap_or(d.lambda_up),
                    lambda_down: self.lambda_down.unwrap_or(d.lambda_down),
                    jacobian_rows: self.jacobian_rows,
                    seed,
                    ..d
                })
            }
            Method::MlpBackprop => {
                let d = BackpropOptions::default();
                MethodSpec::MlpBackprop(BackpropOptions {
                    hidden: self.hidden.unwrap_or(d.hidden),
                    epochs: self.epochs.unwrap_or(d.epochs),
                    learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
                    batch_size: self.batch_size.unwrap_or(d.batch_size),
                    seed,
                    ..d
                })
            }
        };
        let features = self.features();
        if let Some(cols) = &features.columns {
            let wants_ts = cols.iter().any(|c| c == TS_FEATURE);
            if wants_ts && self.ts_augment != Some(true) {
                return Err(CliError::Usage(format!("column {TS_FEATURE} needs ts_augment = true")));
            }
        }
        let mut train = TrainSpec::new(spec, features);
        if self.ts_augment == Some(true) {
            train = train.with_ts_augment(TsAugment {
                samples_per_group: self.ts_samples_per_group.unwrap_or(DEFAULT_SAMPLES_PER_GROUP),
                seed,
            });
        } else if self.ts_samples_per_group.is_some() {
            return Err(CliError::Usage("`ts_samples_per_group` needs ts_augment = true".into()));
        }
        Ok(train)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::from_toml("method = \"wls\"\nseed = 1\nshrinkge = 0.1\n").unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn inapplicable_key_is_rejected() {
        let cfg = ExperimentConfig::from_toml("method = \"wls\"\nseed = 1\nn_trees = 10\n").unwrap();
        assert!(cfg.train_spec().is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let cfg = ExperimentConfig::from_toml("method = \"ols\"\n").unwrap();
        assert!(cfg.train_spec().is_err());
    }

    #[test]
    fn labels() {
        let cfg = ExperimentConfig::from_toml("method = \"pcr\"\nseed = 1\npca_k = 3\nts_augment = true\n").unwrap();
        assert_eq!(cfg.label().unwrap(), "pcr_k3+arma");
        let spec = cfg.train_spec().unwrap();
        assert!(spec.ts_augment.is_some());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml(
            "method = \"random_forest\"\nseed = 4\nm_try = 7\nn_trees = 20\ncolumns = [\"weight\", \"trade_size\"]\n",
        )
        .unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
