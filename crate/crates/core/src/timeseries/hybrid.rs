//! Per-bond-type ARMA(1,1) models of the trade-minus-curve price spread and
//! the one-step forecast feature built from them.

use super::arma::{fit_arma11, forecast_arma11, ArmaParams};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Name of the appended forecast column.
pub const TS_FEATURE: &str = "ts_price_curve_delta_forecast";
pub const DEFAULT_SAMPLES_PER_GROUP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupArmaEntry {
    pub c: f64,
    pub phi: f64,
    pub theta: f64,
    pub sigma2: f64,
    /// Records whose series were fitted.
    pub n_sampled: usize,
    /// Fits that converged and entered the average.
    pub n_converged: usize,
    /// No fit converged: `phi = theta = 0` and `c` is the mean spread.
    pub fallback: bool,
}

impl GroupArmaEntry {
    pub fn params(&self) -> ArmaParams {
        ArmaParams {
            sigma2: self.sigma2,
            ..ArmaParams::fixed(self.c, self.phi, self.theta)
        }
    }

    fn average(fits: &[ArmaParams], spreads: &[f64], n_sampled: usize) -> Self {
        let ok: Vec<&ArmaParams> = fits.iter().filter(|p| p.converged).collect();
        if ok.is_empty() {
            let m = spreads.iter().sum::<f64>() / spreads.len().max(1) as f64;
            let v = spreads.iter().map(|s| (s - m) * (s - m)).sum::<f64>()
                / spreads.len().max(1) as f64;
            return GroupArmaEntry {
                c: m,
                phi: 0.0,
                theta: 0.0,
                sigma2: v,
                n_sampled,
                n_converged: 0,
                fallback: true,
            };
        }
        let k = ok.len() as f64;
        let mean = |f: fn(&ArmaParams) -> f64| ok.iter().map(|p| f(p)).sum::<f64>() / k;
        GroupArmaEntry {
            c: mean(|p| p.c),
            phi: mean(|p| p.phi),
            theta: mean(|p| p.theta),
            sigma2: mean(|p| p.sigma2),
            n_sampled,
            n_converged: ok.len(),
            fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupArmaTable {
    pub samples_per_group: usize,
    pub seed: u64,
    /// Keyed by bond type.
    pub groups: BTreeMap<u32, GroupArmaEntry>,
    /// Average over every converged fit, used for unseen bond types.
    pub global: GroupArmaEntry,
}

fn group_seed(seed: u64, id: u32) -> u64 {
    seed ^ (u64::from(id).wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Fits ARMA(1,1) to the lag-history spread series (oldest first) of up to
/// `samples_per_group` records per bond type and averages the converged
/// parameters.
pub fn build_group_arma_table(
    ds: &Dataset,
    samples_per_group: usize,
    seed: u64,
) -> Result<GroupArmaTable> {
    if ds.is_empty() {
        return Err(invalid("cannot build ARMA table from an empty dataset"));
    }
    if samples_per_group == 0 {
        return Err(invalid("samples_per_group must be at least 1"));
    }
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.records().iter().enumerate() {
        members.entry(r.bond_type_id).or_default().push(i);
    }
    let mut groups = BTreeMap::new();
    let mut all_fits = Vec::new();
    let mut all_spreads = Vec::new();
    let mut total_sampled = 0;
    for (&id, rows) in &members {
        let mut rng = ChaCha8Rng::seed_from_u64(group_seed(seed, id));
        let k = samples_per_group.min(rows.len());
        let mut picks = sample(&mut rng, rows.len(), k).into_vec();
        picks.sort_unstable();
        let mut fits = Vec::with_capacity(k);
        let mut spreads = Vec::with_capacity(k * 10);
        for p in picks {
            let series = ds.records()[rows[p]].history.price_curve_delta();
            spreads.extend_from_slice(&series);
            fits.push(fit_arma11(&series)?);
        }
        groups.insert(id, GroupArmaEntry::average(&fits, &spreads, k));
        total_sampled += k;
        all_fits.extend(fits);
        all_spreads.extend(spreads);
    }
    let global = GroupArmaEntry::average(&all_fits, &all_spreads, total_sampled);
    Ok(GroupArmaTable {
        samples_per_group,
        seed,
        groups,
        global,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentReport {
    /// Records whose bond type was not in the table.
    pub unknown_bond_type: usize,
}

impl GroupArmaTable {
    /// Entry for `id`, or the global average when the type is unknown.
    pub fn entry(&self, id: u32) -> (&GroupArmaEntry, bool) {
        match self.groups.get(&id) {
            Some(e) => (e, true),
            None => (&self.global, false),
        }
    }

    /// One forecast per record from its own spread history.
    pub fn forecasts(&self, ds: &Dataset) -> Result<(Vec<f64>, AugmentReport)> {
        let mut unknown = 0;
        let mut out = Vec::with_capacity(ds.len());
        for r in ds.records() {
            let (e, known) = self.entry(r.bond_type_id);
            unknown += usize::from(!known);
            out.push(forecast_arma11(&e.params(), &r.history.price_curve_delta())?);
        }
        Ok((out, AugmentReport { unknown_bond_type: unknown }))
    }
}

/// Appends the forecast column. The table must come from rows disjoint
/// from any evaluation rows in `ds`.
pub fn augment_with_ts_feature(
    ds: &Dataset,
    table: &GroupArmaTable,
) -> Result<(Dataset, AugmentReport)> {
    let (values, report) = table.forecasts(ds)?;
    if report.unknown_bond_type > 0 {
        log::info!(
            "{} records have bond types outside the ARMA table; used global parameters",
            report.unknown_bond_type
        );
    }
    Ok((ds.with_extra_column(TS_FEATURE, values)?, report))
}
