use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Weighted Error in Prediction per Sample: `sum w|y - y_hat| / sum w`.
pub fn weps(y_true: &[f64], y_pred: &[f64], w: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if w.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: w.len(),
        });
    }
    if y_true.is_empty() {
        return Err(invalid("weps of empty vectors"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((t, p), &wi) in y_true.iter().zip(y_pred).zip(w) {
        if !(wi > 0.0 && wi.is_finite()) {
            return Err(invalid(format!("weights must be positive, got {wi}")));
        }
        num += wi * (t - p).abs();
        den += wi;
    }
    Ok(num / den)
}

/// z value of the two-sided 95% interval.
pub const Z_95: f64 = 1.96;

/// Interval on the difference of two models' errors measured on the same
/// number of records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceInterval {
    pub e1: f64,
    pub e2: f64,
    pub n: usize,
    /// `e1 - e2`
    pub difference: f64,
    /// `(e1(1-e1) + e2(1-e2)) / n`; negative when an error exceeds 1.
    pub variance: f64,
    /// Square root of `variance`, `None` when the variance is negative.
    pub sigma: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// True when either error lies outside `[0, 1]`, where the binomial
    /// variance form has no probabilistic reading.
    pub outside_unit_interval: bool,
    /// The interval excludes zero.
    pub significant: bool,
}

pub fn significance_interval(e1: f64, e2: f64, n: usize) -> Result<SignificanceInterval> {
    if n == 0 {
        return Err(invalid("significance interval needs n >= 1"));
    }
    let difference = e1 - e2;
    let variance = (e1 * (1.0 - e1) + e2 * (1.0 - e2)) / n as f64;
    let sigma = (variance >= 0.0).then(|| variance.sqrt());
    let lower = sigma.map(|s| difference - Z_95 * s);
    let upper = sigma.map(|s| difference + Z_95 * s);
    let significant = matches!((lower, upper), (Some(lo), Some(hi)) if lo > 0.0 || hi < 0.0);
    let unit = |e: f64| (0.0..=1.0).contains(&e);
    Ok(SignificanceInterval {
        e1,
        e2,
        n,
        difference,
        variance,
        sigma,
        lower,
        upper,
        outside_unit_interval: !unit(e1) || !unit(e2),
        significant,
    })
}
