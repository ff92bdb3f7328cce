//! Dickey-Fuller unit-root test and the Engle-Granger two-step
//! cointegration test.

use super::critical_values::{adf_table, engle_granger_table};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub level: f64,
    pub critical_value: f64,
    /// `statistic < critical_value`: the unit root is rejected.
    pub reject: bool,
    pub lags: usize,
    /// Observations in the test regression.
    pub n_obs: usize,
}

/// t statistic of `rho` in `du_t = rho u_{t-1} + sum_i g_i du_{t-i} + e_t`
/// (no intercept, no trend).
pub fn df_statistic(series: &[f64], lags: usize) -> Result<f64> {
    let n = series.len();
    if n < lags + 4 {
        return Err(invalid(format!(
            "Dickey-Fuller regression with {lags} lags needs at least {} points, got {n}",
            lags + 4
        )));
    }
    let d: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // rows t = lags+1 ..= n-1 in series indexing; d[t-1] = u_t - u_{t-1}
    let rows = n - 1 - lags;
    let k = lags + 1;
    if rows <= k {
        return Err(Error::Numerical(format!(
            "Dickey-Fuller regression has {rows} observations for {k} coefficients"
        )));
    }
    let degenerate = || Error::Numerical("degenerate Dickey-Fuller regression".into());
    if lags == 0 {
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for t in 1..n {
            sxx += series[t - 1] * series[t - 1];
            sxy += series[t - 1] * d[t - 1];
        }
        if !(sxx > 0.0) {
            return Err(degenerate());
        }
        let rho = sxy / sxx;
        let rss: f64 = (1..n)
            .map(|t| (d[t - 1] - rho * series[t - 1]).powi(2))
            .sum();
        let tss: f64 = d.iter().map(|v| v * v).sum();
        if !(rss > 1e-28 * tss) {
            return Err(degenerate());
        }
        let s2 = rss / (rows - k) as f64;
        return Ok(rho / (s2 / sxx).sqrt());
    }
    let x = DMatrix::from_fn(rows, k, |r, c| {
        let t = r + lags + 1;
        if c == 0 {
            series[t - 1]
        } else {
            d[t - 1 - c]
        }
    });
    let y = DVector::from_fn(rows, |r, _| d[r + lags]);
    let xtx = x.tr_mul(&x);
    let chol = xtx.clone().cholesky().ok_or_else(degenerate)?;
    let beta = chol.solve(&x.tr_mul(&y));
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    if !(rss > 1e-28 * y.norm_squared()) {
        return Err(degenerate());
    }
    let s2 = rss / (rows - k) as f64;
    let inv00 = chol.inverse()[(0, 0)];
    Ok(beta[0] / (s2 * inv00).sqrt())
}

pub fn adf_test(series: &[f64], lags: usize) -> Result<AdfResult> {
    adf_test_at(series, lags, DEFAULT_LEVEL)
}

pub fn adf_test_at(series: &[f64], lags: usize, level: f64) -> Result<AdfResult> {
    let statistic = df_statistic(series, lags)?;
    let n = series.len();
    let table = adf_table();
    let critical_value = table.critical_value(n, level);
    Ok(AdfResult {
        statistic,
        p_value: table.p_value(statistic, n),
        level,
        critical_value,
        reject: statistic < critical_value,
        lags,
        n_obs: n - 1 - lags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgTestResult {
    pub intercept: f64,
    /// Cointegrating coefficient from the first-stage regression.
    pub beta: f64,
    /// `None` when the first-stage residuals vanish.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub level: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub lags: usize,
    /// First-stage residuals are identically zero, so no test was run.
    pub degenerate: bool,
}

/// Least squares `y = a + b z`; returns `(a, b, residuals)`.
pub fn regress_on(y: &[f64], z: &[f64]) -> Result<(f64, f64, Vec<f64>)> {
    let n = y.len();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    let my = y.iter().sum::<f64>() / n as f64;
    let mz = z.iter().sum::<f64>() / n as f64;
    let (mut szz, mut szy) = (0.0, 0.0);
    for (a, b) in y.iter().zip(z) {
        szz += (b - mz) * (b - mz);
        szy += (b - mz) * (a - my);
    }
    if !(szz > 0.0) {
        return Err(invalid("cointegration regressor is constant"));
    }
    let b = szy / szz;
    let a = my - b * mz;
    let resid = y.iter().zip(z).map(|(y, z)| y - a - b * z).collect();
    Ok((a, b, resid))
}

pub fn engle_granger(y: &[f64], z: &[f64], lags: usize) -> Result<EgTestResult> {
    engle_granger_at(y, z, lags, DEFAULT_LEVEL)
}

pub fn engle_granger_at(y: &[f64], z: &[f64], lags: usize, level: f64) -> Result<EgTestResult> {
    let n = y.len();
    if n < 8 {
        return Err(invalid(format!("Engle-Granger needs at least 8 points, got {n}")));
    }
    let (intercept, beta, resid) = regress_on(y, z)?;
    let table = engle_granger_table();
    let critical_value = table.critical_value(n, level);
    let scale: f64 = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let degenerate = resid.iter().all(|r| r.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE));
    if degenerate {
        return Ok(EgTestResult {
            intercept,
            beta,
            statistic: None,
            p_value: None,
            level,
            critical_value,
            reject: false,
            lags,
            degenerate: true,
        });
    }
    let statistic = df_statistic(&resid, lags)?;
    Ok(EgTestResult {
        intercept,
        beta,
        statistic: Some(statistic),
        p_value: Some(table.p_value(statistic, n)),
        level,
        critical_value,
        reject: statistic < critical_value,
        lags,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagged_and_closed_form_agree() {
        // with zero lags the general regression path must match the shortcut
        let s: Vec<f64> = (0..30).map(|i| ((i * 7 % 11) as f64).sin() + 0.1 * i as f64).collect();
        let t0 = df_statistic(&s, 0).unwrap();
        let d: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let x = DMatrix::from_fn(29, 1, |r, _| s[r]);
        let y = DVector::from_column_slice(&d);
        let b = (x.transpose() * &y)[0] / x.norm_squared();
        let rss = (&y - &x * b).norm_squared();
        let se = (rss / 28.0 / x.norm_squared()).sqrt();
        assert!((t0 - b / se).abs() < 1e-12);
        assert!(df_statistic(&s, 2).unwrap().is_finite());
    }

    #[test]
    fn too_short() {
        assert!(df_statistic(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(adf_test(&[1.0, 2.0, 1.5, 3.0], 1).is_err());
    }

    #[test]
    fn identical_series_are_degenerate() {
        let z: Vec<f64> = (0..20).map(|i| (i as f64 * 0.9).cos() + i as f64).collect();
        let r = engle_granger(&z, &z, 0).unwrap();
        assert_eq!(r.beta, 1.0);
        assert_eq!(r.intercept, 0.0);
        assert!(r.degenerate && !r.reject && r.statistic.is_none());
    }

    #[test]
    fn constant_regressor() {
        assert!(engle_granger(&[1.0; 10], &[2.0; 10], 0).is_err());
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(engle_granger(&z[..7], &z[..7], 0).is_err());
    }
}
