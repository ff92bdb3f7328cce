//! Principal-component regression and single-component power ranking.

use super::glm::{fit_glm, GlmModel, Link};
use super::pca::{fit_pca, PcaTransform};
use crate::error::{invalid, Result};
use crate::evaluation::weps;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which components a PCR model regresses on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComponentSelection {
    /// The `k` largest-variance components.
    #[default]
    Leading,
    /// The `k` components with the lowest single-component training error.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcrModel {
    pub pca: PcaTransform,
    /// Component indices fed to the regression, in column order.
    pub components: Vec<usize>,
    pub glm: GlmModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentPower {
    pub component: usize,
    pub eigenvalue: f64,
    /// Training WEPS of a regression on this component's score alone.
    pub weps: f64,
}

fn score_names(components: &[usize]) -> Vec<String> {
    components.iter().map(|c| format!("pc{}", c + 1)).collect()
}

/// Fits one single-score regression per retained component and returns the
/// components ordered by ascending training WEPS.
///
/// `fit_weights` are used in the regression (pass `None` for OLS); the
/// error is always weighted by `w`.
pub fn rank_components(
    pca: &PcaTransform,
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    fit_weights: Option<&[f64]>,
) -> Result<Vec<ComponentPower>> {
    let all: Vec<usize> = (0..pca.retained).collect();
    let scores = pca.scores(x, &all)?;
    let mut ranking = Vec::with_capacity(all.len());
    for c in all {
        let s = scores.columns(c, 1).into_owned();
        let m = fit_glm(&s, y, fit_weights, Link::Identity, &score_names(&[c]))?;
        let e = weps(y, &m.predict(&s)?, w)?;
        ranking.push(ComponentPower {
            component: c,
            eigenvalue: pca.eigenvalues[c],
            weps: e,
        });
    }
    ranking.sort_by(|a, b| a.weps.total_cmp(&b.weps).then(a.component.cmp(&b.component)));
    Ok(ranking)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcrOptions {
    pub k: usize,
    pub weighted: bool,
    pub standardize: bool,
    pub selection: ComponentSelection,
}

impl Default for PcrOptions {
    fn default() -> Self {
        PcrOptions {
            k: 23,
            weighted: true,
            standardize: true,
            selection: ComponentSelection::Leading,
        }
    }
}

pub fn fit_pcr_matrix(
    x: &DMatrix<f64>,
    y: &[f64],
    w: &[f64],
    names: &[String],
    opts: &PcrOptions,
) -> Result<PcrModel> {
    if opts.k == 0 {
        return Err(invalid("PCR needs k >= 1"));
    }
    let pca = fit_pca(x, opts.standardize, names)?;
    if opts.k > pca.retained {
        return Err(invalid(format!(
            "k = {} exceeds the {} retained components",
            opts.k, pca.retained
        )));
    }
    let fit_w = opts.weighted.then_some(w);
    let components: Vec<usize> = match opts.selection {
        ComponentSelection::Leading => (0..opts.k).collect(),
        ComponentSelection::Power => rank_components(&pca, x, y, w, fit_w)?
            .into_iter()
            .take(opts.k)
            .map(|c| c.component)
            .collect(),
    };
    let scores = pca.scores(x, &components)?;
    let glm = fit_glm(&scores, y, fit_w, Link::Identity, &score_names(&components))?;
    Ok(PcrModel { pca, components, glm })
}

impl PcrModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let scores = self.pca.scores(x, &self.components)?;
        self.glm.predict(&scores)
    }
}
