//! The bond trade record schema.
//!
//! Source files follow the published column naming: the current trade is
//! described by eleven attributes and the ten previous trades by five
//! attributes each, with suffix `_last1` denoting the most recent past trade
//! and `_last10` the oldest.
//!
//! Internally every lag array is stored **oldest to newest**: index `0` holds
//! `*_last10` and index `N_LAGS - 1` holds `*_last1`. Use [`lag_index`] to
//! translate a source lag number into an array index.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of historical trades carried by each record.
pub const N_LAGS: usize = 10;

/// Total attribute count of the source schema (11 current + 5 x 10 lags).
pub const N_FIELDS: usize = 11 + 5 * N_LAGS;

/// Array index of source lag `k` (1 = most recent) in oldest-to-newest storage.
pub fn lag_index(k: usize) -> usize {
    assert!((1..=N_LAGS).contains(&k), "lag {k} out of range 1..={N_LAGS}");
    N_LAGS - k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TradeType {
    CustomerSell = 2,
    CustomerBuy = 3,
    InterDealer = 4,
}

impl TradeType {
    pub const ALL: [TradeType; 3] = [
        TradeType::CustomerSell,
        TradeType::CustomerBuy,
        TradeType::InterDealer,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            2 => Some(TradeType::CustomerSell),
            3 => Some(TradeType::CustomerBuy),
            4 => Some(TradeType::InterDealer),
            _ => None,
        }
    }

    /// Parses a numeric field such as `"3"` or `"3.0"`.
    pub fn parse_field(s: &str) -> Option<Self> {
        let v: f64 = s.trim().parse().ok()?;
        if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
            return None;
        }
        Self::from_code(v as u8)
    }
}

impl TryFrom<u8> for TradeType {
    type Error = String;
    fn try_from(code: u8) -> Result<Self, Self::Error> {
        TradeType::from_code(code).ok_or_else(|| format!("invalid trade type {code}"))
    }
}

impl From<TradeType> for u8 {
    fn from(t: TradeType) -> u8 {
        t.code()
    }
}

impl fmt::Display for TradeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// The ten previous trades, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagHistory {
    /// Seconds between consecutive trades.
    pub time_diff: [f64; N_LAGS],
    pub trade_price: [f64; N_LAGS],
    pub trade_size: [f64; N_LAGS],
    pub trade_type: [TradeType; N_LAGS],
    pub curve_price: [f64; N_LAGS],
}

impl LagHistory {
    /// Trade minus curve price per lag, oldest first.
    pub fn price_curve_delta(&self) -> [f64; N_LAGS] {
        std::array::from_fn(|i| self.trade_price[i] - self.curve_price[i])
    }
}

/// One trade observation with its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondRecord {
    /// Unique record identifier.
    pub row_id: u64,
    /// Bond class identifier (issuer, period, ...), used to group ARMA fits.
    pub bond_type_id: u32,
    /// Evaluation weight, strictly positive.
    pub weight: f64,
    pub current_coupon: f64,
    /// Years.
    pub time_to_maturity: f64,
    pub is_callable: bool,
    /// Seconds between the trade and its report.
    pub reporting_delay: f64,
    pub trade_size: f64,
    pub trade_type: TradeType,
    pub curve_based_price: f64,
    /// Prediction target.
    pub trade_price: f64,
    pub history: LagHistory,
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

impl BondRecord {
    /// Checks every value-level invariant of the schema.
    pub fn validate(&self) -> Result<(), String> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(finite_pos(self.weight), || {
            format!("weight must be positive, got {}", self.weight)
        })?;
        check(finite_nonneg(self.current_coupon), || {
            format!("current_coupon must be >= 0, got {}", self.current_coupon)
        })?;
        check(finite_pos(self.time_to_maturity), || {
            format!("time_to_maturity must be positive, got {}", self.time_to_maturity)
        })?;
        check(finite_nonneg(self.reporting_delay), || {
            format!("reported_delay must be >= 0, got {}", self.reporting_delay)
        })?;
        check(finite_pos(self.trade_size), || {
            format!("trade_size must be positive, got {}", self.trade_size)
        })?;
        check(finite_pos(self.curve_based_price), || {
            format!("curve_based_price must be positive, got {}", self.curve_based_price)
        })?;
        check(finite_pos(self.trade_price), || {
            format!("trade_price must be positive, got {}", self.trade_price)
        })?;
        let h = &self.history;
        for i in 0..N_LAGS {
            let k = N_LAGS - i;
            check(finite_nonneg(h.time_diff[i]), || {
                format!("received_time_diff_last{k} must be >= 0")
            })?;
            check(finite_pos(h.trade_price[i]), || {
                format!("trade_price_last{k} must be positive")
            })?;
            check(finite_pos(h.trade_size[i]), || {
                format!("trade_size_last{k} must be positive")
            })?;
            check(finite_pos(h.curve_price[i]), || {
                format!("curve_based_price_last{k} must be positive")
            })?;
        }
        Ok(())
    }
}

/// Column names of the source files, in canonical file order.
pub fn column_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "id",
        "bond_id",
        "trade_price",
        "weight",
        "current_coupon",
        "time_to_maturity",
        "is_callable",
        "reported_delay",
        "trade_size",
        "trade_type",
        "curve_based_price",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for k in 1..=N_LAGS {
        for stem in LAG_STEMS {
            names.push(format!("{stem}{k}"));
        }
    }
    debug_assert_eq!(names.len(), N_FIELDS);
    names
}

pub(crate) const LAG_STEMS: [&str; 5] = [
    "received_time_diff_last",
    "trade_price_last",
    "trade_size_last",
    "trade_type_last",
    "curve_based_price_last",
];

#[cfg(test)]
pub(crate) fn sample_record(row_id: u64) -> BondRecord {
    BondRecord {
        row_id,
        bond_type_id: 1,
        weight: 1.0,
        current_coupon: 5.0,
        time_to_maturity: 10.0,
        is_callable: false,
        reporting_delay: 30.0,
        trade_size: 100_000.0,
        trade_type: TradeType::InterDealer,
        curve_based_price: 100.0,
        trade_price: 100.0,
        history: LagHistory {
            time_diff: [1000.0; N_LAGS],
            trade_price: [100.0; N_LAGS],
            trade_size: [100_000.0; N_LAGS],
            trade_type: [TradeType::InterDealer; N_LAGS],
            curve_price: [100.0; N_LAGS],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_has_61_columns() {
        let names = column_names();
        assert_eq!(names.len(), 61);
        assert_eq!(names[11], "received_time_diff_last1");
        assert_eq!(names[60], "curve_based_price_last10");
        let unique: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(unique.len(), 61);
    }

    #[test]
    fn lag_index_maps_most_recent_to_end() {
        assert_eq!(lag_index(1), N_LAGS - 1);
        assert_eq!(lag_index(N_LAGS), 0);
    }

    #[test]
    fn trade_type_codes() {
        assert_eq!(TradeType::parse_field("2"), Some(TradeType::CustomerSell));
        assert_eq!(TradeType::parse_field("4.0"), Some(TradeType::InterDealer));
        assert_eq!(TradeType::parse_field("5"), None);
        assert_eq!(TradeType::parse_field("2.5"), None);
    }

    #[test]
    fn validate_rejects_nonpositive_weight() {
        let mut r = sample_record(0);
        assert!(r.validate().is_ok());
        r.weight = 0.0;
        assert!(r.validate().unwrap_err().contains("weight"));
        let mut r = sample_record(0);
        r.history.curve_price[3] = -1.0;
        assert!(r.validate().unwrap_err().contains("curve_based_price_last7"));
    }
}
