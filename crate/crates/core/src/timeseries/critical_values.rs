//! Quantile tables of the Dickey-Fuller t statistic.
//!
//! Both tables come from `examples/critical_values.rs` (a Monte Carlo run
//! with at least a million replications per sample size). Quantiles are
//! interpolated linearly in `1/n` between tabulated sample sizes and
//! linearly in probability between tabulated quantiles.

use crate::error::{invalid, Result};
use std::sync::OnceLock;

/// Cumulative probabilities tabulated for every sample size.
pub const PROBABILITIES: [f64; 19] = [
    0.001, 0.005, 0.01, 0.025, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95,
    0.975, 0.99, 0.995, 0.999,
];

const ADF_CSV: &str = include_str!("../../resources/adf_no_constant.csv");
const EG_CSV: &str = include_str!("../../resources/engle_granger_two_series.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalTable {
    /// Ascending; `None` is the large-sample limit and comes last.
    pub sizes: Vec<Option<usize>>,
    /// `quantiles[i][j]` is the `PROBABILITIES[j]` quantile at `sizes[i]`.
    pub quantiles: Vec<Vec<f64>>,
}

impl CriticalTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut quantiles = Vec::new();
        let mut header_seen = false;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                if fields.len() != PROBABILITIES.len() + 1 || fields[0] != "n" {
                    return Err(invalid("critical value table has an unexpected header"));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != PROBABILITIES.len() + 1 {
                return Err(invalid(format!("critical value row has {} fields", fields.len())));
            }
            let size = if fields[0] == "inf" {
                None
            } else {
                Some(fields[0].parse::<usize>().map_err(|e| invalid(e.to_string()))?)
            };
            let q = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| invalid(e.to_string())))
                .collect::<Result<Vec<f64>>>()?;
            sizes.push(size);
            quantiles.push(q);
        }
        if sizes.is_empty() {
            return Err(invalid("critical value table is empty"));
        }
        let key = |s: &Option<usize>| s.map_or(f64::INFINITY, |n| n as f64);
        if sizes.windows(2).any(|w| key(&w[0]) >= key(&w[1])) {
            return Err(invalid("critical value table sizes must ascend"));
        }
        Ok(CriticalTable { sizes, quantiles })
    }

    /// Quantile curve at sample size `n`, linear in `1/n`. Sizes below the
    /// smallest tabulated size use the smallest row.
    pub fn quantiles_at(&self, n: usize) -> Vec<f64> {
        let inv = |s: &Option<usize>| s.map_or(0.0, |m| 1.0 / m as f64);
        let x = 1.0 / n.max(1) as f64;
        let first = inv(&self.sizes[0]);
        let mut q = if x >= first {
            self.quantiles[0].clone()
        } else {
            let mut out = self.quantiles.last().expect("nonempty").clone();
            for i in 0..self.sizes.len() - 1 {
                let (a, b) = (inv(&self.sizes[i]), inv(&self.sizes[i + 1]));
                if x <= a && x >= b {
                    let t = if a > b { (a - x) / (a - b) } else { 0.0 };
                    out = self.quantiles[i]
                        .iter()
                        .zip(&self.quantiles[i + 1])
                        .map(|(u, v)| u + t * (v - u))
                        .collect();
                    break;
                }
            }
            out
        };
        // guard against Monte Carlo wiggle breaking monotonicity
        for j in 1..q.len() {
            q[j] = q[j].max(q[j - 1]);
        }
        q
    }

    /// Left-tail critical value at significance `level`.
    pub fn critical_value(&self, n: usize, level: f64) -> f64 {
        let q = self.quantiles_at(n);
        let p = &PROBABILITIES;
        if level <= p[0] {
            return q[0];
        }
        for j in 1..p.len() {
            if level <= p[j] {
                let t = (level - p[j - 1]) / (p[j] - p[j - 1]);
                return q[j - 1] + t * (q[j] - q[j - 1]);
            }
        }
        q[p.len() - 1]
    }

    /// Left-tail p-value of `statistic`, clamped to the tabulated range
    /// `[0.001, 0.999]`.
    pub fn p_value(&self, statistic: f64, n: usize) -> f64 {
        let q = self.quantiles_at(n);
        let p = &PROBABILITIES;
        if statistic <= q[0] {
            return p[0];
        }
        for j in 1..q.len() {
            if statistic <= q[j] {
                let span = q[j] - q[j - 1];
                let t = if span > 0.0 { (statistic - q[j - 1]) / span } else { 1.0 };
                return p[j - 1] + t * (p[j] - p[j - 1]);
            }
        }
        p[p.len() - 1]
    }
}

/// Dickey-Fuller t statistic without deterministic terms.
pub fn adf_table() -> &'static CriticalTable {
    static T: OnceLock<CriticalTable> = OnceLock::new();
    T.get_or_init(|| CriticalTable::parse(ADF_CSV).expect("embedded ADF table parses"))
}

/// Dickey-Fuller t statistic on residuals of a two-series regression with
/// intercept.
pub fn engle_granger_table() -> &'static CriticalTable {
    static T: OnceLock<CriticalTable> = OnceLock::new();
    T.get_or_init(|| CriticalTable::parse(EG_CSV).expect("embedded Engle-Granger table parses"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CriticalTable {
        let header = std::iter::once("n".to_string())
            .chain(PROBABILITIES.iter().map(|p| format!("p{p}")))
            .collect::<Vec<_>>()
            .join(",");
        let row = |n: &str, shift: f64| {
            std::iter::once(n.to_string())
                .chain(PROBABILITIES.iter().map(|p| format!("{}", p * 10.0 - 5.0 + shift)))
                .collect::<Vec<_>>()
                .join(",")
        };
        let text = format!("# toy\n{header}\n{}\n{}\n", row("10", -1.0), row("inf", 0.0));
        CriticalTable::parse(&text).unwrap()
    }

    #[test]
    fn interpolates_in_inverse_size() {
        let t = toy();
        // n = 20 sits halfway between 1/10 and 0 in 1/n
        let q = t.quantiles_at(20);
        assert!((q[9] - (0.5 * 10.0 - 5.0 - 0.5)).abs() < 1e-12);
        assert_eq!(t.quantiles_at(5), t.quantiles[0]);
    }

    #[test]
    fn p_value_inverts_quantiles() {
        let t = toy();
        for (j, p) in PROBABILITIES.iter().enumerate() {
            let q = t.quantiles_at(40)[j];
            assert!((t.p_value(q, 40) - p).abs() < 1e-12);
            assert!((t.critical_value(40, *p) - q).abs() < 1e-12);
        }
        assert_eq!(t.p_value(-100.0, 40), 0.001);
        assert_eq!(t.p_value(100.0, 40), 0.999);
    }

    #[test]
    fn embedded_tables_are_sane() {
        for t in [adf_table(), engle_granger_table()] {
            assert_eq!(t.sizes.last(), Some(&None));
            let cv = t.critical_value(100, 0.05);
            assert!(cv < -1.5 && cv > -4.5, "{cv}");
        }
        // residual-based critical values sit further in the left tail
        assert!(engle_granger_table().critical_value(200, 0.05) < adf_table().critical_value(200, 0.05));
    }
}
