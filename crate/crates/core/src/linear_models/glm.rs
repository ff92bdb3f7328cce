//! Generalized linear models with normal (identity) and gamma responses.

use crate::error::{invalid, Error, Result};
use crate::linalg::{weighted_lstsq, with_intercept};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITERATIONS: usize = 100;
const MAX_STEP_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Normal response, `mu = eta`.
    #[default]
    Identity,
    /// Gamma response with the canonical link, `mu = 1 / eta`.
    GammaInverse,
    /// Gamma response with a log link, `mu = exp(eta)`.
    GammaLog,
}

impl Link {
    fn is_gamma(self) -> bool {
        !matches!(self, Link::Identity)
    }

    fn mean(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::GammaInverse => 1.0 / eta,
            Link::GammaLog => eta.exp(),
        }
    }

    fn eta(self, mu: f64) -> f64 {
        match self {
            Link::Identity => mu,
            Link::GammaInverse => 1.0 / mu,
            Link::GammaLog => mu.ln(),
        }
    }

    /// Whether `eta` maps to a valid mean.
    fn admissible(self, eta: f64) -> bool {
        match self {
            Link::Identity => eta.is_finite(),
            Link::GammaInverse => eta > 0.0 && eta.is_finite(),
            Link::GammaLog => eta.is_finite() && eta.exp().is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Weighted residual sum of squares (normal) or weighted gamma deviance.
    pub deviance: f64,
    /// Largest absolute coefficient change of the last iteration.
    pub last_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub link: Link,
    /// Intercept first, then one coefficient per column.
    pub coefficients: Vec<f64>,
    pub weighted: bool,
    pub names: Vec<String>,
    pub diagnostics: GlmDiagnostics,
}

fn deviance(link: Link, y: &[f64], mu: &[f64], w: Option<&[f64]>) -> f64 {
    let wi = |i: usize| w.map_or(1.0, |w| w[i]);
    (0..y.len())
        .map(|i| {
            let d = if link.is_gamma() {
                2.0 * (-(y[i] / mu[i]).ln() + (y[i] - mu[i]) / mu[i])
            } else {
                (y[i] - mu[i]).powi(2)
            };
            wi(i) * d
        })
        .sum()
}

/// Fits `y ~ 1 + x`. `w = None` means uniform weights (ordinary least
/// squares for the identity link).
pub fn fit_glm(
    x: &DMatrix<f64>,
    y: &[f64],
    w: Option<&[f64]>,
    link: Link,
    names: &[String],
) -> Result<GlmModel> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if names.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: names.len() });
    }
    if n < p + 1 {
        return Err(invalid(format!("need at least {} rows for {p} columns, got {n}", p + 1)));
    }
    if let Some(w) = w {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(invalid(format!("weights must be positive, got {bad}")));
        }
    }
    if link.is_gamma() {
        if let Some(i) = y.iter().position(|v| !(*v > 0.0)) {
            return Err(invalid(format!(
                "gamma response needs positive targets, row {} has {}",
                i + 1,
                y[i]
            )));
        }
    }
    let design = with_intercept(x);
    let mut all_names = Vec::with_capacity(p + 1);
    all_names.push("intercept".to_string());
    all_names.extend_from_slice(names);

    if !link.is_gamma() {
        let coefficients = weighted_lstsq(&design, y, w, &all_names)?;
        let mu = crate::linalg::mat_vec(&design, &coefficients);
        return Ok(GlmModel {
            link,
            coefficients,
            weighted: w.is_some(),
            names: names.to_vec(),
            diagnostics: GlmDiagnostics {
                iterations: 1,
                converged: true,
                deviance: deviance(link, y, &mu, w),
                last_change: 0.0,
            },
        });
    }

    // IRLS from the intercept-only fit at the weighted mean.
    let wi = |i: usize| w.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(wi).sum();
    let ybar = (0..n).map(|i| wi(i) * y[i]).sum::<f64>() / sw;
    let mut beta = vec![0.0; p + 1];
    beta[0] = link.eta(ybar);
    let mut eta = crate::linalg::mat_vec(&design, &beta);
    let mut mu: Vec<f64> = eta.iter().map(|&e| link.mean(e)).collect();
    let mut dev = deviance(link, y, &mu, w);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;

    while iterations < IRLS_MAX_ITERATIONS {
        iterations += 1;
        let mut z = Vec::with_capacity(n);
        let mut ww = Vec::with_capacity(n);
        for i in 0..n {
            let (m, e) = (mu[i], eta[i]);
            // d eta / d mu and the gamma variance function V(mu) = mu^2
            let deta = match link {
                Link::GammaInverse => -1.0 / (m * m),
                Link::GammaLog => 1.0 / m,
                Link::Identity => unreachable!(),
            };
            z.push(e + (y[i] - m) * deta);
            ww.push(wi(i) / (deta * deta * m * m));
        }
        let proposal = weighted_lstsq(&design, &z, Some(&ww), &all_names)?;

        // Halve the step until every linear predictor is admissible and
        // the deviance does not blow up.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_STEP_HALVINGS {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&proposal)
                .map(|(b, q)| b + step * (q - b))
                .collect();
            let cand_eta = crate::linalg::mat_vec(&design, &cand);
            if cand_eta.iter().all(|&e| link.admissible(e)) {
                let cand_mu: Vec<f64> = cand_eta.iter().map(|&e| link.mean(e)).collect();
                let cand_dev = deviance(link, y, &cand_mu, w);
                if cand_dev.is_finite() && cand_dev <= dev * (1.0 + 1e-10) + 1e-300 {
                    accepted = Some((cand, cand_eta, cand_mu, cand_dev));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, cand_eta, cand_mu, cand_dev)) = accepted else {
            log::warn!("IRLS could not find an admissible step at iteration {iterations}");
            break;
        };
        let scale = cand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        last_change = cand
            .iter()
            .zip(&beta)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        beta = cand;
        eta = cand_eta;
        mu = cand_mu;
        dev = cand_dev;
        if last_change <= IRLS_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(GlmModel {
        link,
        coefficients: beta,
        weighted: w.is_some(),
        names: names.to_vec(),
        diagnostics: GlmDiagnostics {
            iterations,
            converged,
            deviance: dev,
            last_change,
        },
    })
}

impl GlmModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        let mut eta = vec![self.coefficients[0]; x.nrows()];
        for (j, b) in self.coefficients[1..].iter().enumerate() {
            for (e, v) in eta.iter_mut().zip(x.column(j).iter()) {
                *e += b * v;
            }
        }
        Ok(eta)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let eta = self.linear_predictor(x)?;
        if let Some(i) = eta.iter().position(|&e| !self.link.admissible(e)) {
            return Err(Error::Numerical(format!(
                "linear predictor {} at row {} is outside the {:?} link's domain",
                eta[i],
                i + 1,
                self.link
            )));
        }
        Ok(eta.into_iter().map(|e| self.link.mean(e)).collect())
    }
}
