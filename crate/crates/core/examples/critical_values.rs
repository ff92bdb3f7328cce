//! Regenerates the Dickey-Fuller quantile tables in `resources/`.
//!
//! ```text
//! cargo run --release -p bondlearn --example critical_values -- [OUT_DIR] [REPLICATIONS]
//! ```
//!
//! For every sample size the statistic is simulated under the null: a
//! Gaussian random walk for the plain test, and the residuals of a
//! regression (with intercept) of one random walk on an independent one for
//! the Engle-Granger test. The large-sample row is the intercept of
//! `q(n) = a + b / n + c / n^2` fitted to the four largest sizes.

use bondlearn::timeseries::critical_values::PROBABILITIES;
use bondlearn::timeseries::{df_statistic, regress_on};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;

const SIZES: [usize; 8] = [10, 25, 50, 100, 250, 500, 1000, 2000];
const SEED: u64 = 20_240_611;
const CHUNKS: usize = 64;

#[derive(Clone, Copy)]
enum Kind {
    Adf,
    EngleGranger,
}

fn random_walk(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let mut acc = 0.0;
    for v in out.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        acc += e;
        *v = acc;
    }
}

fn simulate(kind: Kind, n: usize, reps: usize) -> Vec<f64> {
    let per = reps.div_ceil(CHUNKS);
    let tag = match kind {
        Kind::Adf => 1u64,
        Kind::EngleGranger => 2u64,
    };
    let mut stats: Vec<f64> = (0..CHUNKS)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let seed = SEED ^ (tag << 56) ^ ((n as u64) << 24) ^ chunk as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y = vec![0.0; n];
            let mut z = vec![0.0; n];
            let count = per.min(reps.saturating_sub(chunk * per));
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                random_walk(&mut rng, &mut y);
                let s = match kind {
                    Kind::Adf => df_statistic(&y, 0),
                    Kind::EngleGranger => {
                        random_walk(&mut rng, &mut z);
                        regress_on(&y, &z).and_then(|(_, _, u)| df_statistic(&u, 0))
                    }
                };
                if let Ok(s) = s {
                    out.push(s);
                }
            }
            out
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    stats
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn large_sample_limit(rows: &[Vec<f64>]) -> Vec<f64> {
    let tail = &SIZES[SIZES.len() - 4..];
    let x = DMatrix::from_fn(4, 3, |i, j| (1.0 / tail[i] as f64).powi(j as i32));
    (0..PROBABILITIES.len())
        .map(|j| {
            let y = DVector::from_fn(4, |i, _| rows[SIZES.len() - 4 + i][j]);
            let coef = x.clone().svd(true, true).solve(&y, 1e-14).expect("svd solve");
            coef[0]
        })
        .collect()
}

fn render(kind: Kind, reps: usize, rows: &[Vec<f64>], limit: &[f64]) -> String {
    let mut s = String::new();
    let what = match kind {
        Kind::Adf => "Dickey-Fuller t statistic, no intercept or trend, zero augmentation lags",
        Kind::EngleGranger => {
            "Dickey-Fuller t statistic (no intercept, zero lags) on residuals of an OLS regression with intercept of one random walk on another"
        }
    };
    writeln!(s, "# {what}").unwrap();
    writeln!(
        s,
        "# generated by examples/critical_values.rs with {reps} replications per size, seed {SEED}"
    )
    .unwrap();
    writeln!(s, "# n is the series length; inf fitted as a + b/n + c/n^2 over n = 250..2000").unwrap();
    let header: Vec<String> = std::iter::once("n".to_string())
        .chain(PROBABILITIES.iter().map(|p| format!("p{p}")))
        .collect();
    writeln!(s, "{}", header.join(",")).unwrap();
    for (n, row) in SIZES.iter().zip(rows) {
        let vals: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        writeln!(s, "{n},{}", vals.join(",")).unwrap();
    }
    let vals: Vec<String> = limit.iter().map(|v| format!("{v:.4}")).collect();
    writeln!(s, "inf,{}", vals.join(",")).unwrap();
    s
}

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "crates/core/resources".into()));
    let reps: usize = args
        .next()
        .map(|a| a.parse().expect("REPLICATIONS must be an integer"))
        .unwrap_or(1_000_000);
    for (kind, file) in [
        (Kind::Adf, "adf_no_constant.csv"),
        (Kind::EngleGranger, "engle_granger_two_series.csv"),
    ] {
        let rows: Vec<Vec<f64>> = SIZES
            .iter()
            .map(|&n| {
                let sorted = simulate(kind, n, reps);
                eprintln!("{file}: n = {n} done");
                PROBABILITIES.iter().map(|&p| quantile(&sorted, p)).collect()
            })
            .collect();
        let limit = large_sample_limit(&rows);
        let path = out.join(file);
        std::fs::write(&path, render(kind, reps, &rows, &limit)).expect("write table");
        eprintln!("wrote {}", path.display());
    }
}
