//! Seeded generator of schema-compatible trade data.
//!
//! Each bond type owns a latent fair-price random walk from which curve
//! prices are read, and an ARMA(1,1) process for the trade-minus-curve
//! spread. A record is a window of eleven consecutive trades of one bond: the
//! first ten become the lag history and the eleventh is the current trade,
//! so the spread of the current trade continues the record's own history.
//! The current trade price additionally carries a nonlinear term in the
//! bond descriptors and heteroscedastic noise whose variance is inversely
//! proportional to the observation weight.

use super::schema::{BondRecord, LagHistory, TradeType, N_LAGS};
use super::Dataset;
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

const WALK_LEN: usize = 400;
const BURN_IN: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_records: usize,
    pub n_bond_types: usize,
    pub seed: u64,
    pub callable_prob: f64,
    /// Relative frequencies of trade types 2, 3, 4 (normalized on use).
    pub trade_type_probs: [f64; 3],
    /// When false the spread is white noise with zero mean, so the lag
    /// history carries no information about the current spread.
    pub spread_signal: bool,
    pub spread_phi_range: [f64; 2],
    pub spread_theta_range: [f64; 2],
    /// Standard deviation of the per-type stationary spread mean.
    pub spread_mean_sd: f64,
    pub spread_innovation_sd: f64,
    /// Price offsets of trade types 2, 3, 4 relative to curve + spread.
    pub trade_type_offsets: [f64; 3],
    pub price_level_sd: f64,
    pub bond_offset_sd: f64,
    pub walk_step_sd: f64,
    /// Multiplier of the nonlinear descriptor term.
    pub nonlinear_scale: f64,
    /// Noise standard deviation at unit weight.
    pub noise_sd: f64,
    pub weight_log_sd: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_records: 1000,
            n_bond_types: 20,
            seed: 0,
            callable_prob: 0.11,
            trade_type_probs: [0.20, 0.36, 0.43],
            spread_signal: true,
            spread_phi_range: [-0.3, 0.9],
            spread_theta_range: [-0.6, 0.6],
            spread_mean_sd: 0.6,
            spread_innovation_sd: 0.5,
            trade_type_offsets: [-0.1, 0.1, 0.0],
            price_level_sd: 5.0,
            bond_offset_sd: 2.0,
            walk_step_sd: 0.15,
            nonlinear_scale: 0.5,
            noise_sd: 0.4,
            weight_log_sd: 0.8,
        }
    }
}

impl SyntheticConfig {
    pub fn new(n_records: usize, n_bond_types: usize, seed: u64) -> Self {
        SyntheticConfig {
            n_records,
            n_bond_types,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_records == 0 || self.n_bond_types == 0 {
            return Err(invalid("n_records and n_bond_types must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.callable_prob) {
            return Err(invalid("callable_prob must lie in [0, 1]"));
        }
        if self.trade_type_probs.iter().any(|&p| p < 0.0 || !p.is_finite())
            || self.trade_type_probs.iter().sum::<f64>() <= 0.0
        {
            return Err(invalid("trade_type_probs must be nonnegative with positive sum"));
        }
        for (name, [lo, hi]) in [
            ("spread_phi_range", self.spread_phi_range),
            ("spread_theta_range", self.spread_theta_range),
        ] {
            if !(lo <= hi && lo > -1.0 && hi < 1.0) {
                return Err(invalid(format!("{name} must satisfy -1 < lo <= hi < 1")));
            }
        }
        let sds = [
            self.spread_mean_sd,
            self.spread_innovation_sd,
            self.price_level_sd,
            self.bond_offset_sd,
            self.walk_step_sd,
            self.noise_sd,
            self.weight_log_sd,
        ];
        if sds.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(invalid("standard deviations must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Generator parameters of one bond type's spread process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadTruth {
    pub bond_type_id: u32,
    pub intercept: f64,
    pub phi: f64,
    pub theta: f64,
    pub innovation_sd: f64,
}

struct Group {
    walk: Vec<f64>,
    coupon: f64,
    spread: SpreadTruth,
}

fn sample_type(rng: &mut ChaCha8Rng, cdf: &[f64; 3]) -> TradeType {
    let u: f64 = rng.random();
    if u < cdf[0] {
        TradeType::CustomerSell
    } else if u < cdf[1] {
        TradeType::CustomerBuy
    } else {
        TradeType::InterDealer
    }
}

fn type_offset(cfg: &SyntheticConfig, t: TradeType) -> f64 {
    cfg.trade_type_offsets[(t.code() - 2) as usize]
}

/// Descriptor-driven price component that no linear model captures exactly.
fn nonlinear_term(coupon: f64, maturity: f64, callable: bool, size: f64, t: TradeType) -> f64 {
    let call_discount = if callable && maturity > 10.0 { -1.5 } else { 0.0 };
    let convexity = 0.6 * ((coupon - 5.0) / 1.5).powi(2);
    let side = match t {
        TradeType::CustomerBuy => 1.0,
        TradeType::CustomerSell => -1.0,
        TradeType::InterDealer => 0.0,
    };
    let size_impact = -0.5 * side * (size.ln() - 10.5).tanh();
    let curve = 0.8 * (maturity / 4.0).sin();
    call_discount + convexity + size_impact + curve
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    generate_synthetic_with_truth(cfg).map(|(ds, _)| ds)
}

/// Like [`generate_synthetic`], also returning the spread parameters of
/// each bond type (sorted by id).
pub fn generate_synthetic_with_truth(cfg: &SyntheticConfig) -> Result<(Dataset, Vec<SpreadTruth>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let total: f64 = cfg.trade_type_probs.iter().sum();
    let p = cfg.trade_type_probs.map(|x| x / total);
    let type_cdf = [p[0], p[0] + p[1], 1.0];

    let groups: Vec<Group> = (0..cfg.n_bond_types)
        .map(|g| {
            let level = 100.0 + cfg.price_level_sd * std_normal.sample(&mut rng);
            let mut walk = Vec::with_capacity(WALK_LEN);
            walk.push(level);
            for _ in 1..WALK_LEN {
                let last = *walk.last().unwrap();
                walk.push(last + cfg.walk_step_sd * std_normal.sample(&mut rng));
            }
            let coupon = rng.random_range(2.0..8.0);
            let [plo, phi_hi] = cfg.spread_phi_range;
            let [tlo, thi] = cfg.spread_theta_range;
            let phi = if plo < phi_hi { rng.random_range(plo..phi_hi) } else { plo };
            let theta = if tlo < thi { rng.random_range(tlo..thi) } else { tlo };
            let mean = cfg.spread_mean_sd * std_normal.sample(&mut rng);
            let sd = cfg.spread_innovation_sd * rng.random_range(0.7..1.3);
            Group {
                walk,
                coupon,
                spread: SpreadTruth {
                    bond_type_id: g as u32 + 1,
                    intercept: mean * (1.0 - phi),
                    phi,
                    theta,
                    innovation_sd: sd,
                },
            }
        })
        .collect();

    let size_dist = LogNormal::new(10.5, 1.0).expect("valid lognormal");
    let gap_dist = Exp::new(1.0 / 3600.0).expect("valid exponential");
    let delay_dist = Exp::new(1.0 / 120.0).expect("valid exponential");
    let weight_dist = LogNormal::new(0.0, cfg.weight_log_sd).expect("valid lognormal");

    let mut records = Vec::with_capacity(cfg.n_records);
    for i in 0..cfg.n_records {
        let g = rng.random_range(0..cfg.n_bond_types);
        let group = &groups[g];
        let start = rng.random_range(0..WALK_LEN - N_LAGS - 1);
        let offset = cfg.bond_offset_sd * std_normal.sample(&mut rng);
        let curve: [f64; N_LAGS + 1] = std::array::from_fn(|j| group.walk[start + j] + offset);

        let s = &group.spread;
        let mut spread = [0.0; N_LAGS + 1];
        if cfg.spread_signal {
            let mut prev = s.intercept / (1.0 - s.phi);
            let mut prev_shock = 0.0;
            for t in 0..BURN_IN + N_LAGS + 1 {
                let shock = s.innovation_sd * std_normal.sample(&mut rng);
                let d = s.intercept + s.phi * prev + s.theta * prev_shock + shock;
                if t >= BURN_IN {
                    spread[t - BURN_IN] = d;
                }
                prev = d;
                prev_shock = shock;
            }
        } else {
            for d in spread.iter_mut() {
                *d = s.innovation_sd * std_normal.sample(&mut rng);
            }
        }

        let types: [TradeType; N_LAGS + 1] = std::array::from_fn(|_| sample_type(&mut rng, &type_cdf));
        let sizes: [f64; N_LAGS + 1] = std::array::from_fn(|_| size_dist.sample(&mut rng));
        let gaps: [f64; N_LAGS] = std::array::from_fn(|_| gap_dist.sample(&mut rng));
        let delay = delay_dist.sample(&mut rng);
        let coupon = (group.coupon + 0.5 * std_normal.sample(&mut rng)).max(0.0);
        let maturity = rng.random_range(0.25..30.0);
        let callable = rng.random::<f64>() < cfg.callable_prob;
        let weight = weight_dist.sample(&mut rng);
        let noise = cfg.noise_sd / weight.sqrt() * std_normal.sample(&mut rng);

        let lag_price: [f64; N_LAGS] =
            std::array::from_fn(|j| curve[j] + spread[j] + type_offset(cfg, types[j]));
        let current = N_LAGS;
        let trade_price = curve[current]
            + spread[current]
            + type_offset(cfg, types[current])
            + cfg.nonlinear_scale
                * nonlinear_term(coupon, maturity, callable, sizes[current], types[current])
            + noise;

        records.push(BondRecord {
            row_id: i as u64 + 1,
            bond_type_id: s.bond_type_id,
            weight,
            current_coupon: coupon,
            time_to_maturity: maturity,
            is_callable: callable,
            reporting_delay: delay,
            trade_size: sizes[current],
            trade_type: types[current],
            curve_based_price: curve[current],
            trade_price,
            history: LagHistory {
                time_diff: gaps,
                trade_price: lag_price,
                trade_size: std::array::from_fn(|j| sizes[j]),
                trade_type: std::array::from_fn(|j| types[j]),
                curve_price: std::array::from_fn(|j| curve[j]),
            },
        });
    }
    let ds = Dataset::new(records)?;
    Ok((ds, groups.into_iter().map(|g| g.spread).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::write_csv;

    fn csv_bytes(ds: &Dataset) -> Vec<u8> {
        let mut buf = Vec::new();
        write_csv(ds, &mut buf).unwrap();
        buf
    }

    #[test]
    fn same_seed_gives_byte_identical_data() {
        let cfg = SyntheticConfig::new(1000, 20, 7);
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(csv_bytes(&a), csv_bytes(&b));
        let c = generate_synthetic(&SyntheticConfig::new(1000, 20, 8)).unwrap();
        assert_ne!(csv_bytes(&a), csv_bytes(&c));
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(generate_synthetic(&SyntheticConfig::new(0, 5, 1)).is_err());
        assert!(generate_synthetic(&SyntheticConfig::new(5, 0, 1)).is_err());
    }

    #[test]
    fn spread_continues_record_history() {
        // with the nonlinear term and noise switched off the current trade
        // price minus curve is the next value of the spread process
        let cfg = SyntheticConfig {
            nonlinear_scale: 0.0,
            noise_sd: 0.0,
            trade_type_offsets: [0.0; 3],
            ..SyntheticConfig::new(2000, 1, 3)
        };
        let (ds, truth) = generate_synthetic_with_truth(&cfg).unwrap();
        let s = &truth[0];
        // regress current spread on the last lag: slope close to the lag-1
        // autocorrelation of an ARMA(1,1)
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for r in ds.records() {
            let x = r.history.trade_price[N_LAGS - 1] - r.history.curve_price[N_LAGS - 1];
            let y = r.trade_price - r.curve_based_price;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let n = ds.len() as f64;
        let slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
        let (phi, theta) = (s.phi, s.theta);
        let rho1 = (1.0 + phi * theta) * (phi + theta) / (1.0 + 2.0 * phi * theta + theta * theta);
        assert!((slope - rho1).abs() < 0.08, "slope {slope} vs rho1 {rho1}");
    }
}
