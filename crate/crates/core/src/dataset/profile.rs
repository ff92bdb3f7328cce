//! Exploratory statistics: correlations, per-record autocorrelations and
//! empirical PDFs of the categorical attributes.

use super::schema::{BondRecord, TradeType, N_LAGS};
use super::Dataset;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest lag at which per-record autocorrelations are averaged. With ten
/// points per record this keeps at least five pairs per estimate.
pub const PROFILE_MAX_LAG: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagAutocorrelation {
    pub variable: String,
    /// Entry `k-1` is the mean lag-`k` autocorrelation; `None` when no record
    /// had a defined value.
    pub mean_by_lag: Vec<Option<f64>>,
    /// Records contributing to each lag (constant series are skipped).
    pub records_used: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub n_records: usize,
    pub continuous_columns: Vec<String>,
    /// Pearson correlations; `None` marks pairs involving a constant column.
    pub correlation_matrix: Vec<Vec<Option<f64>>>,
    pub mean_autocorrelation: Vec<LagAutocorrelation>,
    /// attribute -> (value -> relative frequency)
    pub categorical_pdfs: BTreeMap<String, BTreeMap<String, f64>>,
}

fn continuous_columns(records: &[BondRecord]) -> Vec<(String, Vec<f64>)> {
    let col = |f: &dyn Fn(&BondRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let mut out = vec![
        ("weight".to_string(), col(&|r| r.weight)),
        ("current_coupon".to_string(), col(&|r| r.current_coupon)),
        ("time_to_maturity".to_string(), col(&|r| r.time_to_maturity)),
        ("reported_delay".to_string(), col(&|r| r.reporting_delay)),
        ("trade_size".to_string(), col(&|r| r.trade_size)),
        ("curve_based_price".to_string(), col(&|r| r.curve_based_price)),
        ("trade_price".to_string(), col(&|r| r.trade_price)),
    ];
    for k in 1..=N_LAGS {
        let i = N_LAGS - k;
        out.push((
            format!("received_time_diff_last{k}"),
            col(&|r| r.history.time_diff[i]),
        ));
        out.push((format!("trade_price_last{k}"), col(&|r| r.history.trade_price[i])));
        out.push((format!("trade_size_last{k}"), col(&|r| r.history.trade_size[i])));
        out.push((
            format!("curve_based_price_last{k}"),
            col(&|r| r.history.curve_price[i]),
        ));
    }
    out
}

/// Pearson correlation, `None` when either input has zero variance.
pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between `series[..n-lag]` and `series[lag..]`.
pub(crate) fn lagged_correlation(series: &[f64], lag: usize) -> Option<f64> {
    if lag >= series.len() - 1 {
        return None;
    }
    pearson(&series[..series.len() - lag], &series[lag..])
}

pub fn profile(ds: &Dataset) -> Result<ProfileReport> {
    if ds.is_empty() {
        return Err(invalid("profile of empty dataset"));
    }
    let records = ds.records();
    let cols = continuous_columns(records);
    let p = cols.len();
    let mut corr = vec![vec![None; p]; p];
    let constant: Vec<bool> = cols
        .iter()
        .map(|(_, v)| v.iter().all(|&x| x == v[0]))
        .collect();
    for i in 0..p {
        if !constant[i] {
            corr[i][i] = Some(1.0);
        }
        for j in (i + 1)..p {
            let c = pearson(&cols[i].1, &cols[j].1);
            corr[i][j] = c;
            corr[j][i] = c;
        }
    }

    type Getter = fn(&BondRecord) -> [f64; N_LAGS];
    let vars: [(&str, Getter); 5] = [
        ("received_time_diff", |r| r.history.time_diff),
        ("trade_price", |r| r.history.trade_price),
        ("trade_size", |r| r.history.trade_size),
        ("trade_type", |r| r.history.trade_type.map(|t| t.code() as f64)),
        ("curve_based_price", |r| r.history.curve_price),
    ];
    let mean_autocorrelation = vars
        .iter()
        .map(|(name, get)| {
            let mut sums = vec![0.0; PROFILE_MAX_LAG];
            let mut counts = vec![0usize; PROFILE_MAX_LAG];
            for r in records {
                let series = get(r);
                for lag in 1..=PROFILE_MAX_LAG {
                    if let Some(c) = lagged_correlation(&series, lag) {
                        sums[lag - 1] += c;
                        counts[lag - 1] += 1;
                    }
                }
            }
            LagAutocorrelation {
                variable: name.to_string(),
                mean_by_lag: sums
                    .iter()
                    .zip(&counts)
                    .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                    .collect(),
                records_used: counts,
            }
        })
        .collect();

    let n = records.len() as f64;
    let callable = records.iter().filter(|r| r.is_callable).count() as f64;
    let mut pdfs = BTreeMap::new();
    pdfs.insert(
        "is_callable".to_string(),
        BTreeMap::from([
            ("0".to_string(), (n - callable) / n),
            ("1".to_string(), callable / n),
        ]),
    );
    let mut tt = BTreeMap::new();
    for t in TradeType::ALL {
        let c = records.iter().filter(|r| r.trade_type == t).count() as f64;
        tt.insert(t.to_string(), c / n);
    }
    pdfs.insert("trade_type".to_string(), tt);

    Ok(ProfileReport {
        n_records: records.len(),
        continuous_columns: cols.into_iter().map(|(n, _)| n).collect(),
        correlation_matrix: corr,
        mean_autocorrelation,
        categorical_pdfs: pdfs,
    })
}
