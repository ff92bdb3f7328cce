//! Least squares and gamma GLMs, PCA, and principal-component regression.

mod glm;
mod pca;
mod pcr;

pub use glm::{fit_glm, GlmDiagnostics, GlmModel, Link, IRLS_MAX_ITERATIONS, IRLS_TOLERANCE};
pub use pca::{apply_pca, fit_pca, PcaTransform};
pub use pcr::{fit_pcr_matrix, rank_components, ComponentPower, ComponentSelection, PcrModel, PcrOptions};

use crate::dataset::{feature_matrix, Dataset, FeatureSpec};
use crate::error::Result;

/// Ranks the principal components of the dataset's feature matrix by the
/// training WEPS of a regression on each score alone (best first).
pub fn rank_components_by_target_power(
    ds: &Dataset,
    features: &FeatureSpec,
    weighted: bool,
    standardize: bool,
) -> Result<Vec<ComponentPower>> {
    let fm = feature_matrix(ds, features)?;
    let pca = fit_pca(&fm.matrix, standardize, &fm.names)?;
    let w = ds.weights();
    rank_components(&pca, &fm.matrix, ds.targets(), w, weighted.then_some(w))
}
