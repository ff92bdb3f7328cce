use bondlearn::dataset::{generate_synthetic, Dataset, FeatureSpec, SyntheticConfig};
use bondlearn::evaluation::weps;
use bondlearn::linear_models::{
    apply_pca, fit_glm, fit_pca, fit_pcr_matrix, rank_components, rank_components_by_target_power,
    ComponentSelection, Link, PcrOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
}

/// `(X'WX)^-1 X'Wy` with an intercept column, by explicit inversion.
fn normal_equations(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.nrows();
    let xa = DMatrix::from_fn(n, x.ncols() + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let wd = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let xtwx = xa.transpose() * &wd * &xa;
    let xtwy = xa.transpose() * &wd * DVector::from_column_slice(y);
    (xtwx.try_inverse().unwrap() * xtwy).iter().copied().collect()
}

fn ols_objective(x: &DMatrix<f64>, y: &[f64], w: &[f64], beta: &[f64]) -> f64 {
    (0..x.nrows())
        .map(|i| {
            let f = beta[0] + (0..x.ncols()).map(|j| beta[j + 1] * x[(i, j)]).sum::<f64>();
            w[i] * (y[i] - f).powi(2)
        })
        .sum()
}

#[test]
fn identity_link_matches_weighted_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(20..80);
        let p = rng.random_range(1..8);
        let x = gaussian(&mut rng, n, p);
        let y: Vec<f64> = (0..n).map(|i| x.row(i).sum() + rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..4.0)).collect();
        let m = fit_glm(&x, &y, Some(&w), Link::Identity, &names(p)).unwrap();
        let oracle = normal_equations(&x, &y, &w);
        assert_eq!(m.coefficients.len(), p + 1);
        for (a, b) in m.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
        // uniform weights reduce to the unweighted fit exactly
        let ones = vec![1.0; n];
        let wls = fit_glm(&x, &y, Some(&ones), Link::Identity, &names(p)).unwrap();
        let ols = fit_glm(&x, &y, None, Link::Identity, &names(p)).unwrap();
        assert_eq!(wls.coefficients, ols.coefficients);
    }
}

#[test]
fn residuals_are_orthogonal_to_the_design() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = gaussian(&mut rng, 200, 6);
    let y: Vec<f64> = (0..200).map(|i| 3.0 * x[(i, 2)] - x[(i, 5)] + rng.random_range(-2.0..2.0)).collect();
    let w: Vec<f64> = (0..200).map(|_| rng.random_range(0.5..2.0)).collect();
    let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    for weights in [None, Some(w.as_slice())] {
        let m = fit_glm(&x, &y, weights, Link::Identity, &names(6)).unwrap();
        let pred = m.predict(&x).unwrap();
        for j in 0..=6 {
            let dot: f64 = (0..200)
                .map(|i| {
                    let xij = if j == 0 { 1.0 } else { x[(i, j - 1)] };
                    weights.map_or(1.0, |w| w[i]) * xij * (y[i] - pred[i])
                })
                .sum();
            assert!(dot.abs() < 1e-8 * ynorm, "column {j}: {dot}");
        }
    }
    // the weighted fit minimizes the weighted objective
    let wls = fit_glm(&x, &y, Some(&w), Link::Identity, &names(6)).unwrap();
    let ols = fit_glm(&x, &y, None, Link::Identity, &names(6)).unwrap();
    assert!(ols_objective(&x, &y, &w, &wls.coefficients) <= ols_objective(&x, &y, &w, &ols.coefficients) + 1e-9);
}

#[test]
fn predictions_match_matrix_product_and_scale_with_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = gaussian(&mut rng, 50, 5);
    let y: Vec<f64> = (0..50).map(|_| rng.random_range(90.0..110.0)).collect();
    let m = fit_glm(&x, &y, None, Link::Identity, &names(5)).unwrap();
    let beta = DVector::from_column_slice(&m.coefficients[1..]);
    let oracle = &x * beta;
    let pred = m.predict(&x).unwrap();
    for i in 0..50 {
        assert!((pred[i] - (oracle[i] + m.coefficients[0])).abs() < 1e-10);
    }
    let c = -3.5;
    let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
    let ms = fit_glm(&x, &scaled, None, Link::Identity, &names(5)).unwrap();
    for (a, b) in ms.predict(&x).unwrap().iter().zip(&pred) {
        assert!((a - c * b).abs() < 1e-9 * b.abs().max(1.0));
    }
    assert!(m.predict(&gaussian(&mut rng, 3, 4)).is_err());
}

#[test]
fn dependent_design_names_the_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x = gaussian(&mut rng, 30, 3);
    for i in 0..30 {
        x[(i, 2)] = 2.0 * x[(i, 0)] - x[(i, 1)];
    }
    let y: Vec<f64> = (0..30).map(|i| x[(i, 0)]).collect();
    let err = fit_glm(&x, &y, None, Link::Identity, &names(3)).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("x2") || msg.contains("x1") || msg.contains("x0"), "{msg}");
}

#[test]
fn pca_invariants_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = gaussian(&mut rng, 200, 10);
    for standardize in [true, false] {
        let t = fit_pca(&x, standardize, &names(10)).unwrap();
        assert_eq!(t.retained, 10);
        for a in 0..10 {
            for b in 0..10 {
                let dot: f64 = (0..10).map(|j| t.loadings[a][j] * t.loadings[b][j]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(t.eigenvalues.windows(2).all(|e| e[0] >= e[1]));
        assert!(t.eigenvalues.iter().all(|&e| e >= -1e-10));
        let z = t.normalize(&x).unwrap();
        let total: f64 = (0..10).map(|j| z.column(j).norm_squared() / 199.0).sum();
        assert!((t.eigenvalues.iter().sum::<f64>() - total).abs() < 1e-8);

        let scores = apply_pca(&t, &x, 10).unwrap();
        // projection oracle (X - mu) / s . L
        for i in 0..200 {
            for c in 0..10 {
                let v: f64 = (0..10).map(|j| (x[(i, j)] - t.means[j]) / t.scales[j] * t.loadings[c][j]).sum();
                assert!((scores[(i, c)] - v).abs() < 1e-12);
            }
        }
        // score covariance is diagonal with the eigenvalues
        for a in 0..10 {
            for b in 0..10 {
                let cov = scores.column(a).dot(&scores.column(b)) / 199.0;
                let want = if a == b { t.eigenvalues[a] } else { 0.0 };
                assert!((cov - want).abs() < 1e-8);
            }
        }
        let back = t.reconstruct(&scores);
        assert!((back - &x).abs().max() < 1e-8);
    }
}

#[test]
fn apply_rejects_too_many_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = gaussian(&mut rng, 40, 3);
    let t = fit_pca(&x, true, &names(3)).unwrap();
    assert!(apply_pca(&t, &x, 4).is_err());
    assert!(apply_pca(&t, &gaussian(&mut rng, 2, 2), 1).is_err());
}

#[test]
fn full_rank_pcr_reproduces_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = gaussian(&mut rng, 300, 8);
    let y: Vec<f64> = (0..300).map(|i| 100.0 + x.row(i).sum() + rng.random_range(-1.0..1.0)).collect();
    let ones = vec![1.0; 300];
    let pcr = fit_pcr_matrix(
        &x,
        &y,
        &ones,
        &names(8),
        &PcrOptions {
            k: 8,
            weighted: false,
            ..Default::default()
        },
    )
    .unwrap();
    let ols = fit_glm(&x, &y, None, Link::Identity, &names(8)).unwrap();
    for (a, b) in pcr.predict(&x).unwrap().iter().zip(ols.predict(&x).unwrap()) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn one_component_suffices_for_rank_one_signal() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 400;
    let direction = [1.0, -2.0, 0.5, 3.0];
    // rank-one design: every row is a multiple of `direction` plus tiny noise
    let t: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = DMatrix::from_fn(n, 4, |i, j| t[i] * direction[j] + 1e-7 * rng.random_range(-1.0..1.0));
    let y: Vec<f64> = t.iter().map(|v| 50.0 + 2.0 * v).collect();
    let w = vec![1.0; n];
    let opts = |k| PcrOptions {
        k,
        weighted: false,
        standardize: false,
        selection: ComponentSelection::Leading,
    };
    let one = fit_pcr_matrix(&x, &y, &w, &names(4), &opts(1)).unwrap();
    let full = fit_glm(&x, &y, None, Link::Identity, &names(4)).unwrap();
    let e1 = weps(&y, &one.predict(&x).unwrap(), &w).unwrap();
    let ef = weps(&y, &full.predict(&x).unwrap(), &w).unwrap();
    assert!((e1 - ef).abs() < 1e-6, "{e1} vs {ef}");
}

#[test]
fn target_on_low_variance_component_is_ranked_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let n = 1000;
    let p = 6;
    // independent columns with decreasing variance; the target loads on
    // the smallest one
    let sds = [5.0, 4.0, 3.0, 2.0, 1.0, 0.2];
    let x = DMatrix::from_fn(n, p, |_, j| { let z: f64 = StandardNormal.sample(&mut rng); sds[j] * z });
    let y: Vec<f64> = (0..n).map(|i| 10.0 + 20.0 * x[(i, 5)] + 0.1 * rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let t = fit_pca(&x, false, &names(p)).unwrap();
    let ranking = rank_components(&t, &x, &y, &w, Some(&w)).unwrap();
    assert_eq!(ranking[0].component, p - 1);
    assert!(ranking.windows(2).all(|r| r[0].weps <= r[1].weps));
}

#[test]
fn unrelated_target_gives_baseline_component_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 2000;
    let x = gaussian(&mut rng, n, 5);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = vec![1.0; n];
    let t = fit_pca(&x, true, &names(5)).unwrap();
    let ranking = rank_components(&t, &x, &y, &w, None).unwrap();
    let mean = y.iter().sum::<f64>() / n as f64;
    let base = weps(&y, &vec![mean; n], &w).unwrap();
    for c in ranking {
        assert!((c.weps - base).abs() < 0.02 * base, "component {}: {} vs {base}", c.component, c.weps);
    }
}

#[test]
fn dataset_level_ranking_runs_on_synthetic_trades() {
    let ds: Dataset = generate_synthetic(&SyntheticConfig::new(2000, 10, 3)).unwrap();
    let r = rank_components_by_target_power(&ds, &FeatureSpec::one_hot(), true, true).unwrap();
    assert!(!r.is_empty());
    assert!(r.windows(2).all(|p| p[0].weps <= p[1].weps));
}

#[test]
fn gamma_glm_fits_positive_prices() {
    let ds = generate_synthetic(&SyntheticConfig::new(2000, 10, 3)).unwrap();
    let cols: Vec<String> = ["curve_based_price", "trade_price_last1", "curve_based_price_last1"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fm = bondlearn::dataset::feature_matrix(&ds, &FeatureSpec::one_hot().with_columns(cols.clone())).unwrap();
    for link in [Link::GammaInverse, Link::GammaLog] {
        let m = fit_glm(&fm.matrix, ds.targets(), Some(ds.weights()), link, &cols).unwrap();
        assert!(m.diagnostics.converged, "{link:?}");
        let e = weps(ds.targets(), &m.predict(&fm.matrix).unwrap(), ds.weights()).unwrap();
        assert!(e < 2.0, "{link:?}: {e}");
    }
}
