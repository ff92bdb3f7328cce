//! Bond trade data: schema, I/O, synthetic generation, profiling and
//! numeric feature views.

mod csv_io;
mod features;
mod profile;
mod schema;
mod synthetic;

pub use csv_io::{load_csv, read_csv, write_csv, LoadReport};
pub use features::{feature_matrix, Encoding, FeatureMatrix, FeatureSpec};
pub use profile::{profile, ProfileReport};
pub use schema::{column_names, lag_index, BondRecord, LagHistory, TradeType, N_FIELDS, N_LAGS};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, SpreadTruth, SyntheticConfig};

#[cfg(test)]
pub(crate) use schema::sample_record;

use crate::error::{invalid, Error, Result};
use std::sync::Arc;

/// A numeric column appended to a dataset after construction (e.g. a
/// time-series forecast feature).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Immutable table of validated bond records.
///
/// Cloning is cheap: records are shared behind an [`Arc`].
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Arc<Vec<BondRecord>>,
    extra: Arc<Vec<ExtraColumn>>,
    weights: Arc<Vec<f64>>,
    targets: Arc<Vec<f64>>,
}

impl Dataset {
    /// Validates every record; the first invalid one aborts construction.
    pub fn new(records: Vec<BondRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|reason| Error::InvalidRecord { row: i + 1, reason })?;
        }
        Ok(Self::from_validated(records))
    }

    pub(crate) fn from_validated(records: Vec<BondRecord>) -> Self {
        let weights = records.iter().map(|r| r.weight).collect();
        let targets = records.iter().map(|r| r.trade_price).collect();
        Dataset {
            records: Arc::new(records),
            extra: Arc::new(Vec::new()),
            weights: Arc::new(weights),
            targets: Arc::new(targets),
        }
    }

    pub fn schema_version(&self) -> &'static str {
        crate::SCHEMA_VERSION
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[BondRecord] {
        &self.records
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trade prices (the prediction target).
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn extra_columns(&self) -> &[ExtraColumn] {
        &self.extra
    }

    pub fn extra_column(&self, name: &str) -> Option<&ExtraColumn> {
        self.extra.iter().find(|c| c.name == name)
    }

    /// Rows at `indices`, in that order, including extra columns.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        let mut ds = Dataset::from_validated(records);
        let extra = self
            .extra
            .iter()
            .map(|c| ExtraColumn {
                name: c.name.clone(),
                values: indices.iter().map(|&i| c.values[i]).collect(),
            })
            .collect();
        ds.extra = Arc::new(extra);
        ds
    }

    /// Returns a copy with one more numeric column. Existing columns are
    /// untouched.
    pub fn with_extra_column(&self, name: &str, values: Vec<f64>) -> Result<Dataset> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if self.extra_column(name).is_some() || column_names().iter().any(|c| c == name) {
            return Err(invalid(format!("column {name} already exists")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("column {name} has non-finite value at row {}", i + 1)));
        }
        let mut extra = (*self.extra).clone();
        extra.push(ExtraColumn {
            name: name.to_string(),
            values,
        });
        Ok(Dataset {
            records: Arc::clone(&self.records),
            extra: Arc::new(extra),
            weights: Arc::clone(&self.weights),
            targets: Arc::clone(&self.targets),
        })
    }

    /// Returns a copy whose trade prices are replaced by `targets`.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Dataset> {
        if targets.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: targets.len(),
            });
        }
        let records: Vec<BondRecord> = self
            .records
            .iter()
            .zip(&targets)
            .map(|(r, &y)| BondRecord {
                trade_price: y,
                ..r.clone()
            })
            .collect();
        let mut ds = Dataset::new(records)?;
        ds.extra = Arc::clone(&self.extra);
        Ok(ds)
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.extra == other.extra
    }
}
