use crate::error::{invalid, Result};

/// Sample autocorrelations `r_0..=r_max_lag` with the usual biased
/// estimator `sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(invalid(format!(
            "series of length {n} is too short for max_lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(invalid("autocorrelation of a zero-variance series"));
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                c.iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

/// Partial autocorrelations by the Durbin-Levinson recursion; element 0 is 1.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(series, max_lag)?;
    Ok(pacf_from_acf(&r))
}

pub(crate) fn pacf_from_acf(r: &[f64]) -> Vec<f64> {
    let max_lag = r.len() - 1;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * r[j]).sum::<f64>();
        let pkk = if den.abs() > 0.0 { num / den } else { 0.0 };
        let prev = phi.clone();
        phi = (1..k).map(|j| prev[j - 1] - pkk * prev[k - j - 1]).collect();
        phi.push(pkk);
        out.push(pkk);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_zero_is_one() {
        let s = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert_eq!(acf(&s, 2).unwrap()[0], 1.0);
        assert_eq!(pacf(&s, 2).unwrap()[0], 1.0);
    }

    #[test]
    fn alternating_series() {
        // the biased estimator gives -(n - 1) / n, tending to -1
        for n in [10usize, 100, 1000] {
            let s: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let r = acf(&s, 1).unwrap();
            assert!((r[1] + (n as f64 - 1.0) / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn pacf_lag_one_equals_acf() {
        let s: Vec<f64> = (0..50).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let r = acf(&s, 5).unwrap();
        let p = pacf(&s, 5).unwrap();
        assert_eq!(p[1], r[1]);
        assert!(p.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn ar2_pacf_matches_yule_walker() {
        // theoretical ACF of AR(2) with phi = (0.5, 0.3): pacf(2) = 0.3, pacf(3) = 0
        let (a, b) = (0.5, 0.3);
        let r1 = a / (1.0 - b);
        let r2 = a * r1 + b;
        let r3 = a * r2 + b * r1;
        let p = pacf_from_acf(&[1.0, r1, r2, r3]);
        assert!((p[2] - 0.3).abs() < 1e-12);
        assert!(p[3].abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        assert!(acf(&[1.0, 2.0], 1).is_err());
        assert!(acf(&[2.0; 10], 1).is_err());
    }
}
