//! Numeric feature views of a [`Dataset`].
//!
//! Column order is fixed:
//!
//! 1. `id` and `bond_id` (only when requested),
//! 2. current trade: `weight`, `current_coupon`, `time_to_maturity`,
//!    `is_callable`, `reported_delay`, `trade_size`, `trade_type`,
//!    `curve_based_price`,
//! 3. for lag `k = 1..=10` (most recent first): `received_time_diff_last{k}`,
//!    `trade_price_last{k}`, `trade_size_last{k}`, `trade_type_last{k}`,
//!    `curve_based_price_last{k}`,
//! 4. extra columns in the order they were appended.
//!
//! Under [`Encoding::OneHot`] every trade type column `c` becomes two
//! indicators `c_2` and `c_3`; the reference level 4 (inter-dealer, the most
//! frequent) is dropped. Under [`Encoding::Ordinal`] the codes 2/3/4 are
//! passed through and flagged categorical for the tree learners.

use super::schema::{TradeType, LAG_STEMS, N_LAGS};
use super::Dataset;
use crate::error::{invalid, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    OneHot,
    Ordinal,
}

/// Which columns a model sees and how categorical fields are encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FeatureSpec {
    pub encoding: Encoding,
    /// The unique record id carries no signal and is excluded by default.
    #[serde(default)]
    pub include_row_id: bool,
    #[serde(default)]
    pub include_bond_type_id: bool,
    /// Restrict to these encoded column names, in this order.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
}

impl FeatureSpec {
    pub fn one_hot() -> Self {
        FeatureSpec::default()
    }

    pub fn ordinal() -> Self {
        FeatureSpec {
            encoding: Encoding::Ordinal,
            ..Default::default()
        }
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Self {
        self.columns = Some(columns);
        self
    }

    /// Encoded column names this spec produces for a dataset carrying
    /// `extra` appended columns.
    pub fn resolve_names(&self, extra: &[String]) -> Result<Vec<String>> {
        Ok(self.resolve(extra)?.into_iter().map(|c| c.name).collect())
    }

    fn resolve(&self, extra: &[String]) -> Result<Vec<Column>> {
        let all = all_columns(self, extra);
        match &self.columns {
            None => Ok(all),
            Some(wanted) => {
                if wanted.is_empty() {
                    return Err(invalid("feature column list is empty"));
                }
                let mut out = Vec::with_capacity(wanted.len());
                for name in wanted {
                    if out.iter().any(|c: &Column| &c.name == name) {
                        return Err(invalid(format!("feature column {name} listed twice")));
                    }
                    match all.iter().find(|c| &c.name == name) {
                        Some(c) => out.push(c.clone()),
                        None => {
                            return Err(invalid(format!(
                                "unknown feature column {name} for {:?} encoding",
                                self.encoding
                            )))
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    /// One row per record.
    pub matrix: DMatrix<f64>,
    pub names: Vec<String>,
    /// True for trade type columns under ordinal encoding.
    pub categorical: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    RowId,
    BondId,
    Weight,
    Coupon,
    Maturity,
    Callable,
    Delay,
    Size,
    Type(Option<TradeType>),
    Curve,
    LagTime(usize),
    LagPrice(usize),
    LagSize(usize),
    LagType(usize, Option<TradeType>),
    LagCurve(usize),
    Extra(usize),
}

#[derive(Debug, Clone)]
struct Column {
    name: String,
    source: Source,
    categorical: bool,
}

fn all_columns(spec: &FeatureSpec, extra: &[String]) -> Vec<Column> {
    let mut cols = Vec::new();
    let mut push = |name: String, source: Source, categorical: bool| {
        cols.push(Column {
            name,
            source,
            categorical,
        })
    };
    let one_hot = spec.encoding == Encoding::OneHot;
    if spec.include_row_id {
        push("id".into(), Source::RowId, false);
    }
    if spec.include_bond_type_id {
        push("bond_id".into(), Source::BondId, false);
    }
    push("weight".into(), Source::Weight, false);
    push("current_coupon".into(), Source::Coupon, false);
    push("time_to_maturity".into(), Source::Maturity, false);
    push("is_callable".into(), Source::Callable, false);
    push("reported_delay".into(), Source::Delay, false);
    push("trade_size".into(), Source::Size, false);
    if one_hot {
        push("trade_type_2".into(), Source::Type(Some(TradeType::CustomerSell)), false);
        push("trade_type_3".into(), Source::Type(Some(TradeType::CustomerBuy)), false);
    } else {
        push("trade_type".into(), Source::Type(None), true);
    }
    push("curve_based_price".into(), Source::Curve, false);
    for k in 1..=N_LAGS {
        let i = N_LAGS - k;
        push(format!("{}{k}", LAG_STEMS[0]), Source::LagTime(i), false);
        push(format!("{}{k}", LAG_STEMS[1]), Source::LagPrice(i), false);
        push(format!("{}{k}", LAG_STEMS[2]), Source::LagSize(i), false);
        if one_hot {
            push(
                format!("{}{k}_2", LAG_STEMS[3]),
                Source::LagType(i, Some(TradeType::CustomerSell)),
                false,
            );
            push(
                format!("{}{k}_3", LAG_STEMS[3]),
                Source::LagType(i, Some(TradeType::CustomerBuy)),
                false,
            );
        } else {
            push(format!("{}{k}", LAG_STEMS[3]), Source::LagType(i, None), true);
        }
        push(format!("{}{k}", LAG_STEMS[4]), Source::LagCurve(i), false);
    }
    for (j, name) in extra.iter().enumerate() {
        push(name.clone(), Source::Extra(j), false);
    }
    cols
}

fn encode_type(t: TradeType, level: Option<TradeType>) -> f64 {
    match level {
        None => t.code() as f64,
        Some(l) => f64::from(u8::from(t == l)),
    }
}

/// Builds the numeric design matrix (target excluded).
pub fn feature_matrix(ds: &Dataset, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    if ds.is_empty() {
        return Err(invalid("feature_matrix on empty dataset"));
    }
    let extra_names: Vec<String> = ds.extra_columns().iter().map(|c| c.name.clone()).collect();
    let cols = spec.resolve(&extra_names)?;
    let n = ds.len();
    let mut matrix = DMatrix::<f64>::zeros(n, cols.len());
    for (j, col) in cols.iter().enumerate() {
        let mut out = matrix.column_mut(j);
        for (i, r) in ds.records().iter().enumerate() {
            let h = &r.history;
            out[i] = match col.source {
                Source::RowId => r.row_id as f64,
                Source::BondId => r.bond_type_id as f64,
                Source::Weight => r.weight,
                Source::Coupon => r.current_coupon,
                Source::Maturity => r.time_to_maturity,
                Source::Callable => f64::from(u8::from(r.is_callable)),
                Source::Delay => r.reporting_delay,
                Source::Size => r.trade_size,
                Source::Type(level) => encode_type(r.trade_type, level),
                Source::Curve => r.curve_based_price,
                Source::LagTime(l) => h.time_diff[l],
                Source::LagPrice(l) => h.trade_price[l],
                Source::LagSize(l) => h.trade_size[l],
                Source::LagType(l, level) => encode_type(h.trade_type[l], level),
                Source::LagCurve(l) => h.curve_price[l],
                Source::Extra(e) => ds.extra_columns()[e].values[i],
            };
        }
    }
    Ok(FeatureMatrix {
        matrix,
        names: cols.iter().map(|c| c.name.clone()).collect(),
        categorical: cols.iter().map(|c| c.categorical).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_record;

    fn ds_with_types(types: &[TradeType]) -> Dataset {
        let recs = types
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut r = sample_record(i as u64);
                r.trade_type = t;
                r
            })
            .collect();
        Dataset::new(recs).unwrap()
    }

    #[test]
    fn one_hot_reference_level_is_inter_dealer() {
        let ds = ds_with_types(&[
            TradeType::CustomerSell,
            TradeType::CustomerBuy,
            TradeType::InterDealer,
        ]);
        let fm = feature_matrix(&ds, &FeatureSpec::one_hot()).unwrap();
        let c2 = fm.names.iter().position(|n| n == "trade_type_2").unwrap();
        assert_eq!(fm.names[c2 + 1], "trade_type_3");
        assert_eq!((fm.matrix[(0, c2)], fm.matrix[(0, c2 + 1)]), (1.0, 0.0));
        assert_eq!((fm.matrix[(1, c2)], fm.matrix[(1, c2 + 1)]), (0.0, 1.0));
        assert_eq!((fm.matrix[(2, c2)], fm.matrix[(2, c2 + 1)]), (0.0, 0.0));
        assert!(fm.categorical.iter().all(|c| !c));
    }

    #[test]
    fn ordinal_with_ids_has_sixty_columns() {
        let ds = ds_with_types(&[TradeType::CustomerBuy]);
        let spec = FeatureSpec {
            encoding: Encoding::Ordinal,
            include_row_id: true,
            include_bond_type_id: true,
            columns: None,
        };
        let fm = feature_matrix(&ds, &spec).unwrap();
        assert_eq!(fm.matrix.ncols(), 61 - 1);
        assert!(!fm.names.iter().any(|n| n == "trade_price"));
        // default excludes both identifiers
        let fm = feature_matrix(&ds, &FeatureSpec::ordinal()).unwrap();
        assert_eq!(fm.matrix.ncols(), 58);
        assert_eq!(fm.categorical.iter().filter(|&&c| c).count(), 11);
        let tt = fm.names.iter().position(|n| n == "trade_type").unwrap();
        assert_eq!(fm.matrix[(0, tt)], 3.0);
        // one-hot: 11 categorical columns become 22 indicators
        let fm = feature_matrix(&ds, &FeatureSpec::one_hot()).unwrap();
        assert_eq!(fm.matrix.ncols(), 58 + 11);
    }

    #[test]
    fn continuous_columns_pass_through() {
        let mut r = sample_record(0);
        r.curve_based_price = 100.0;
        r.trade_price = 100.0;
        r.history.trade_price = [100.0; N_LAGS];
        r.history.curve_price = [100.0; N_LAGS];
        r.history.trade_price[crate::dataset::lag_index(1)] = 101.5;
        let ds = Dataset::new(vec![r.clone()]).unwrap();
        let fm = feature_matrix(&ds, &FeatureSpec::one_hot()).unwrap();
        let get = |name: &str| fm.matrix[(0, fm.names.iter().position(|n| n == name).unwrap())];
        assert_eq!(get("curve_based_price"), 100.0);
        assert_eq!(get("trade_price_last1"), 101.5);
        assert_eq!(get("trade_price_last2"), 100.0);
        assert_eq!(get("curve_based_price_last10"), 100.0);
        assert_eq!(get("weight"), r.weight);
        assert_eq!(get("trade_size"), r.trade_size);
    }

    #[test]
    fn named_subset_and_extra_columns() {
        let ds = ds_with_types(&[TradeType::CustomerBuy, TradeType::InterDealer]);
        let ds = ds.with_extra_column("ts", vec![0.5, -0.5]).unwrap();
        let spec = FeatureSpec::one_hot().with_columns(vec!["ts".into(), "current_coupon".into()]);
        let fm = feature_matrix(&ds, &spec).unwrap();
        assert_eq!(fm.names, vec!["ts", "current_coupon"]);
        assert_eq!(fm.matrix[(1, 0)], -0.5);
        let bad = FeatureSpec::one_hot().with_columns(vec!["trade_type".into()]);
        assert!(feature_matrix(&ds, &bad).is_err());
        let all = feature_matrix(&ds, &FeatureSpec::one_hot()).unwrap();
        assert_eq!(all.names.last().unwrap(), "ts");
    }

    #[test]
    fn column_order_is_stable() {
        let a = FeatureSpec::one_hot().resolve_names(&[]).unwrap();
        let b = FeatureSpec::one_hot().resolve_names(&[]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], "weight");
        assert_eq!(a[9], "received_time_diff_last1");
    }
}
