use bondlearn::evaluation::weps;
use bondlearn::linear_models::{fit_glm, Link};
use bondlearn::neural::{lm_step, train_backprop, train_lm, BackpropOptions, LmOptions, MlpModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Column means and population standard deviations.
fn moments(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let m = x.column(j).iter().sum::<f64>() / n;
            let v = x.column(j).iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            (m, if v > 0.0 { v.sqrt() } else { 1.0 })
        })
        .unzip()
}

/// Forward pass written out element by element.
fn forward_oracle(params: &[f64], d: usize, h: usize, means: &[f64], sds: &[f64], row: &[f64]) -> f64 {
    let z: Vec<f64> = (0..d).map(|j| (row[j] - means[j]) / sds[j]).collect();
    let mut out = params[h * d + 2 * h];
    for k in 0..h {
        let mut a = params[h * d + k];
        for j in 0..d {
            a += params[k * d + j] * z[j];
        }
        out += params[h * d + h + k] * a.tanh();
    }
    out
}

fn weighted_sse(m: &MlpModel, x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> f64 {
    let p = m.forward(x).unwrap();
    (0..y.len()).map(|i| w[i] * (p[i] - y[i]).powi(2)).sum()
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, d: usize, h: usize) -> (MlpModel, DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(n, d, |_, j| rng.random_range(-2.0..2.0) * (j + 1) as f64 + j as f64);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let mut m = MlpModel::from_training(&x, &names(d), h, 0.0, rng.random()).unwrap();
    let params: Vec<f64> = (0..m.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
    m.set_params(&params).unwrap();
    (m, x, y, w)
}

#[test]
fn forward_matches_elementwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let (d, h) = (rng.random_range(1..6), rng.random_range(1..8));
        let (m, x, _, _) = random_model(&mut rng, 15, d, h);
        assert_eq!(m.n_params(), h * (d + 1) + h + 1);
        let (means, sds) = moments(&x);
        let got = m.forward(&x).unwrap();
        for i in 0..15 {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            let want = forward_oracle(m.params(), d, h, &means, &sds, &row);
            assert!((got[i] - want).abs() < 1e-12);
        }
        assert!(m.forward(&DMatrix::zeros(2, d + 1)).is_err());
    }
}

#[test]
fn zero_weights_predict_the_output_bias() {
    let x = DMatrix::from_fn(10, 3, |i, j| (i * 3 + j) as f64);
    let mut m = MlpModel::from_training(&x, &names(3), 4, 0.0, 1).unwrap();
    let mut p = vec![0.0; m.n_params()];
    *p.last_mut().unwrap() = 2.5;
    m.set_params(&p).unwrap();
    assert!(m.forward(&x).unwrap().iter().all(|&v| v == 2.5));

    // one unit, unit output weight: tanh is the identity to first order
    let mut lin = MlpModel::from_training(&x, &names(3), 1, 0.0, 1).unwrap();
    lin.set_params(&[0.3, -0.2, 0.1, 0.0, 1.0, 0.0]).unwrap();
    let tiny = DMatrix::from_fn(1, 3, |_, j| lin.input_means()[j] + 1e-4 * lin.input_scales()[j]);
    let out = lin.forward(&tiny).unwrap()[0];
    assert!((out - 1e-4 * (0.3 - 0.2 + 0.1)).abs() < 1e-10);
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let (d, h) = (rng.random_range(1..5), rng.random_range(1..6));
        let (m, x, y, w) = random_model(&mut rng, 5, d, h);
        let g = m.gradient(&x, &y, &w).unwrap();
        let mut probe = m.clone();
        for k in 0..m.n_params() {
            let mut p = m.params().to_vec();
            p[k] += 1e-5;
            probe.set_params(&p).unwrap();
            let up = weighted_sse(&probe, &x, &y, &w);
            p[k] -= 2e-5;
            probe.set_params(&p).unwrap();
            let down = weighted_sse(&probe, &x, &y, &w);
            let fd = (up - down) / 2e-5;
            let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn gradient_vanishes_at_a_perfect_fit_and_is_linear_in_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (m, x, _, w) = random_model(&mut rng, 20, 3, 4);
    let y = m.forward(&x).unwrap();
    assert!(m.gradient(&x, &y, &w).unwrap().iter().all(|g| g.abs() < 1e-12));

    let y: Vec<f64> = y.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
    let g = m.gradient(&x, &y, &w).unwrap();
    let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
    let g2 = m.gradient(&x, &y, &w2).unwrap();
    for (a, b) in g.iter().zip(&g2) {
        assert!((b - 2.0 * a).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

fn smooth_problem(seed: u64, n: usize, noise: f64) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-2.0..2.0f64));
    let y: Vec<f64> = (0..n)
        .map(|i| 100.0 + 2.0 * x[(i, 0)].sin() + 0.5 * x[(i, 1)].powi(2) + noise * rng.random_range(-1.0..1.0))
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    (x, y, w)
}

#[test]
fn accepted_lm_epochs_lower_the_loss() {
    let (x, y, w) = smooth_problem(4, 300, 0.1);
    let opts = LmOptions {
        hidden: 6,
        max_epochs: 60,
        seed: 5,
        ..Default::default()
    };
    let m = train_lm(&x, &y, &w, &names(2), &opts).unwrap();
    assert!(!m.log.is_empty());
    let sw: f64 = w.iter().sum();
    let initial = {
        let fresh = MlpModel::from_training(&x, &names(2), 6, 0.0, 5).unwrap();
        let mean = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let p = fresh.forward(&x).unwrap();
        let sd = (y.iter().zip(&w).map(|(a, b)| b * (a - mean).powi(2)).sum::<f64>() / sw).sqrt();
        (0..y.len()).map(|i| w[i] * (p[i] * sd + mean - y[i]).powi(2)).sum::<f64>() / sw
    };
    let mut prev = initial;
    for e in &m.log {
        if e.accepted {
            assert!(e.loss < prev, "epoch {}: {} !< {prev}", e.epoch, e.loss);
        } else {
            assert_eq!(e.loss, prev);
        }
        prev = e.loss;
    }
    // the logged loss is the weighted mean squared error of the final model
    let final_loss = weighted_sse(&m, &x, &y, &w) / sw;
    assert!((final_loss - m.log.last().unwrap().loss).abs() < 1e-9 * final_loss.max(1e-12));

    let again = train_lm(&x, &y, &w, &names(2), &opts).unwrap();
    assert_eq!(m.params(), again.params());
    assert_eq!(m.input_means(), again.input_means());
}

#[test]
fn heavy_damping_turns_the_step_into_scaled_gradient_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (m, x, y, w) = random_model(&mut rng, 40, 3, 3);
    let g = m.gradient(&x, &y, &w).unwrap();
    let mut last_norm = f64::INFINITY;
    let mut last_err = f64::INFINITY;
    for lambda in [1e2, 1e4, 1e6, 1e8] {
        let step = lm_step(&m, &x, &y, &w, lambda).unwrap();
        let norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        // lambda * delta -> -J^T r = -grad / 2
        let err = step
            .iter()
            .zip(&g)
            .map(|(s, g)| (lambda * s + 0.5 * g).powi(2))
            .sum::<f64>()
            .sqrt()
            / g.iter().map(|g| 0.25 * g * g).sum::<f64>().sqrt();
        assert!(norm < last_norm && err < last_err, "lambda {lambda}: {norm} {err}");
        last_norm = norm;
        last_err = err;
    }
    assert!(last_err < 1e-4);
    assert!(last_norm < 1e-5);
}

#[test]
fn network_does_at_least_as_well_as_a_linear_fit_on_linear_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 400;
    let x = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<f64> = (0..n)
        .map(|i| 50.0 + 3.0 * x[(i, 0)] - 2.0 * x[(i, 1)] + 0.5 * x[(i, 2)] + 0.2 * rng.random_range(-1.0..1.0))
        .collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let lin = fit_glm(&x, &y, Some(&w), Link::Identity, &names(3)).unwrap();
    let lin_weps = weps(&y, &lin.predict(&x).unwrap(), &w).unwrap();
    let m = train_lm(
        &x,
        &y,
        &w,
        &names(3),
        &LmOptions {
            hidden: 4,
            max_epochs: 200,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let nn_weps = weps(&y, &m.forward(&x).unwrap(), &w).unwrap();
    assert!(nn_weps <= lin_weps + 1e-3, "{nn_weps} vs {lin_weps}");
}

#[test]
fn zero_learning_rate_leaves_weights_unchanged() {
    let (x, y, w) = smooth_problem(8, 100, 0.1);
    let m = train_backprop(
        &x,
        &y,
        &w,
        &names(2),
        &BackpropOptions {
            hidden: 3,
            epochs: 5,
            learning_rate: 0.0,
            seed: 4,
            standardize_target: false,
            ..Default::default()
        },
    )
    .unwrap();
    let fresh = MlpModel::from_training(&x, &names(2), 3, 0.0, 4).unwrap();
    assert_eq!(m.params(), fresh.params());
}

#[test]
fn single_sample_descent_is_monotone() {
    let x = DMatrix::from_row_slice(1, 2, &[0.3, -0.7]);
    let m = train_backprop(
        &x,
        &[1.5],
        &[2.0],
        &names(2),
        &BackpropOptions {
            hidden: 3,
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 1,
            seed: 9,
            standardize_target: false,
        },
    )
    .unwrap();
    assert_eq!(m.log.len(), 100);
    assert!(m.log.windows(2).all(|e| e[1].loss < e[0].loss));
}

#[test]
fn divergent_learning_rate_is_an_error() {
    let (x, y, w) = smooth_problem(10, 50, 0.1);
    let r = train_backprop(
        &x,
        &y,
        &w,
        &names(2),
        &BackpropOptions {
            hidden: 4,
            epochs: 200,
            learning_rate: 1e6,
            standardize_target: false,
            ..Default::default()
        },
    );
    assert!(r.is_err());
}

#[test]
fn backprop_reaches_lm_quality_on_an_easy_problem() {
    let (x, y, w) = smooth_problem(11, 500, 0.2);
    let lm = train_lm(
        &x,
        &y,
        &w,
        &names(2),
        &LmOptions {
            hidden: 5,
            max_epochs: 100,
            seed: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let bp = train_backprop(
        &x,
        &y,
        &w,
        &names(2),
        &BackpropOptions {
            hidden: 5,
            epochs: 3000,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 2,
            standardize_target: true,
        },
    )
    .unwrap();
    let e_lm = weps(&y, &lm.forward(&x).unwrap(), &w).unwrap();
    let e_bp = weps(&y, &bp.forward(&x).unwrap(), &w).unwrap();
    assert!(e_bp <= 1.1 * e_lm, "backprop {e_bp} vs LM {e_lm}");
}
