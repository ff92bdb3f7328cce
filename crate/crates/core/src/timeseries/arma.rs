//! ARMA(1,1) estimation by conditional sum of squares.
//!
//! The model is `y_t = c + phi y_{t-1} + theta e_{t-1} + e_t`. Innovations
//! are rebuilt recursively from `e_1 = 0`, and `S = sum_{t>=2} e_t^2` is
//! minimized over `(c, phi, theta)` with `|phi|, |theta| <= 1 - 1e-6` by a
//! damped Gauss-Newton iteration started from nine points.

use crate::error::{invalid, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub const COEFFICIENT_BOUND: f64 = 1.0 - 1e-6;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 500;
const STARTS: [f64; 3] = [-0.5, 0.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaParams {
    pub c: f64,
    pub phi: f64,
    pub theta: f64,
    /// `S / (n - 1)`, the mean squared recursive innovation.
    pub sigma2: f64,
    pub converged: bool,
    /// Conditional sum of squares at the returned parameters.
    pub objective: f64,
    pub iterations: usize,
}

impl ArmaParams {
    /// Parameters with no estimation behind them.
    pub fn fixed(c: f64, phi: f64, theta: f64) -> Self {
        ArmaParams {
            c,
            phi,
            theta,
            sigma2: 0.0,
            converged: true,
            objective: 0.0,
            iterations: 0,
        }
    }
}

/// Recursive innovations `e_1..e_n` with `e_1 = 0`.
pub fn css_residuals(series: &[f64], c: f64, phi: f64, theta: f64) -> Vec<f64> {
    let mut e = vec![0.0; series.len()];
    for t in 1..series.len() {
        e[t] = series[t] - c - phi * series[t - 1] - theta * e[t - 1];
    }
    e
}

pub fn css_objective(series: &[f64], c: f64, phi: f64, theta: f64) -> f64 {
    css_residuals(series, c, phi, theta).iter().map(|v| v * v).sum()
}

struct Eval {
    s: f64,
    /// `J^T e`, half the gradient of `S`.
    g: Vector3<f64>,
    /// `J^T J`
    h: Matrix3<f64>,
    jnorm: f64,
    enorm: f64,
}

fn evaluate(y: &[f64], p: Vector3<f64>) -> Eval {
    let (c, phi, theta) = (p[0], p[1], p[2]);
    let mut e_prev = 0.0;
    let mut d_prev = Vector3::zeros();
    let mut s = 0.0;
    let mut g = Vector3::zeros();
    let mut h = Matrix3::zeros();
    for t in 1..y.len() {
        let e = y[t] - c - phi * y[t - 1] - theta * e_prev;
        let d = Vector3::new(
            -1.0 - theta * d_prev[0],
            -y[t - 1] - theta * d_prev[1],
            -e_prev - theta * d_prev[2],
        );
        s += e * e;
        g += d * e;
        h += d * d.transpose();
        e_prev = e;
        d_prev = d;
    }
    Eval {
        s,
        g,
        jnorm: h.trace().sqrt(),
        enorm: s.sqrt(),
        h,
    }
}

fn project(mut p: Vector3<f64>) -> Vector3<f64> {
    p[1] = p[1].clamp(-COEFFICIENT_BOUND, COEFFICIENT_BOUND);
    p[2] = p[2].clamp(-COEFFICIENT_BOUND, COEFFICIENT_BOUND);
    p
}

/// Coordinates free to move: a coefficient sitting on its bound is frozen
/// when the descent direction `-g` points outward.
fn free_mask(p: &Vector3<f64>, g: &Vector3<f64>) -> [bool; 3] {
    let mut free = [true; 3];
    for k in 1..3 {
        if (p[k] >= COEFFICIENT_BOUND && g[k] < 0.0) || (p[k] <= -COEFFICIENT_BOUND && g[k] > 0.0) {
            free[k] = false;
        }
    }
    free
}

fn is_stationary_point(p: &Vector3<f64>, ev: &Eval) -> bool {
    let free = free_mask(p, &ev.g);
    let pg = Vector3::from_fn(|k, _| if free[k] { ev.g[k] } else { 0.0 });
    pg.norm() <= GRADIENT_TOLERANCE * ev.jnorm * ev.enorm || ev.s == 0.0
}

/// Solves the damped normal equations on the free coordinates.
fn step(ev: &Eval, free: &[bool; 3], mu: f64) -> Option<Vector3<f64>> {
    let mut a = ev.h;
    let mut rhs = ev.g;
    for k in 0..3 {
        a[(k, k)] += mu * ev.h[(k, k)].max(1e-12);
        if !free[k] {
            for j in 0..3 {
                a[(k, j)] = 0.0;
                a[(j, k)] = 0.0;
            }
            a[(k, k)] = 1.0;
            rhs[k] = 0.0;
        }
    }
    a.cholesky().map(|c| c.solve(&rhs))
}

/// True when the undamped step promises less than a relative `1e-10`
/// reduction of `S`, i.e. no progress is left above rounding level.
fn exhausted(p: &Vector3<f64>, ev: &Eval) -> bool {
    let free = free_mask(p, &ev.g);
    match step(ev, &free, 0.0) {
        Some(d) => ev.g.dot(&d) <= 1e-10 * ev.s,
        None => false,
    }
}

/// Runs the damped iteration from `start`; returns the final point, its
/// evaluation, convergence and iteration count.
fn descend(y: &[f64], start: Vector3<f64>) -> (Vector3<f64>, f64, bool, usize) {
    let mut p = project(start);
    let mut ev = evaluate(y, p);
    let mut mu = 1e-3;
    for it in 0..MAX_ITERATIONS {
        if is_stationary_point(&p, &ev) {
            return (p, ev.s, true, it);
        }
        let free = free_mask(&p, &ev.g);
        let mut moved = false;
        while mu < 1e12 {
            let Some(d) = step(&ev, &free, mu) else {
                mu *= 10.0;
                continue;
            };
            let cand = project(p - d);
            let cev = evaluate(y, cand);
            if cev.s.is_finite() && cev.s < ev.s {
                p = cand;
                ev = cev;
                mu = (mu / 10.0).max(1e-12);
                moved = true;
                break;
            }
            mu *= 10.0;
        }
        if !moved {
            return (p, ev.s, is_stationary_point(&p, &ev) || exhausted(&p, &ev), it + 1);
        }
    }
    let ok = is_stationary_point(&p, &ev) || exhausted(&p, &ev);
    (p, ev.s, ok, MAX_ITERATIONS)
}

pub fn fit_arma11(series: &[f64]) -> Result<ArmaParams> {
    let n = series.len();
    if n < 5 {
        return Err(invalid(format!("ARMA(1,1) needs at least 5 points, got {n}")));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(invalid("ARMA series contains non-finite values"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut best: Option<(Vector3<f64>, f64, bool, usize)> = None;
    for &phi in &STARTS {
        for &theta in &STARTS {
            let start = Vector3::new(mean * (1.0 - phi), phi, theta);
            let run = descend(series, start);
            let better = match &best {
                None => true,
                Some(b) => run.1 < b.1 || (run.1 == b.1 && run.2 && !b.2),
            };
            if better {
                best = Some(run);
            }
        }
    }
    let (p, s, converged, iterations) = best.expect("nine starts");
    Ok(ArmaParams {
        c: p[0],
        phi: p[1],
        theta: p[2],
        sigma2: s / (n - 1) as f64,
        converged,
        objective: s,
        iterations,
    })
}

/// One-step forecast `c + phi y_n + theta e_n`, with `e_n` rebuilt from the
/// series under `p`.
pub fn forecast_arma11(p: &ArmaParams, series: &[f64]) -> Result<f64> {
    let last = *series
        .last()
        .ok_or_else(|| invalid("cannot forecast from an empty series"))?;
    let e = css_residuals(series, p.c, p.phi, p.theta);
    Ok(p.c + p.phi * last + p.theta * e[e.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_forecast_intercept() {
        let p = ArmaParams::fixed(1.7, 0.0, 0.0);
        assert_eq!(forecast_arma11(&p, &[3.0, -2.0, 9.0]).unwrap(), 1.7);
    }

    #[test]
    fn hand_evaluated_forecast() {
        // series (2, 2): e_2 = 2 - 0.5 * 2 = 1, so y_last = 2 and e_last = 1
        let p = ArmaParams::fixed(0.0, 0.5, 0.2);
        assert_eq!(css_residuals(&[2.0, 2.0], 0.0, 0.5, 0.2), vec![0.0, 1.0]);
        let f = forecast_arma11(&p, &[2.0, 2.0]).unwrap();
        assert!((f - 1.2).abs() < 1e-15);
    }

    #[test]
    fn constant_series_fixed_point() {
        let k = 3.25;
        let phi = 0.4;
        let p = ArmaParams::fixed((1.0 - phi) * k, phi, -0.3);
        let f = forecast_arma11(&p, &[k; 10]).unwrap();
        assert!((f - k).abs() < 1e-12);
    }

    #[test]
    fn descent_from_every_start() {
        let y: Vec<f64> = (0..10).map(|i| ((i * 5 % 7) as f64 * 0.8).sin()).collect();
        let p = fit_arma11(&y).unwrap();
        let mean = y.iter().sum::<f64>() / 10.0;
        for &phi in &STARTS {
            for &theta in &STARTS {
                assert!(p.objective <= css_objective(&y, mean * (1.0 - phi), phi, theta));
            }
        }
        assert!(p.phi.abs() <= COEFFICIENT_BOUND && p.theta.abs() <= COEFFICIENT_BOUND);
    }

    #[test]
    fn too_short() {
        assert!(fit_arma11(&[1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(forecast_arma11(&ArmaParams::fixed(0.0, 0.0, 0.0), &[]).is_err());
    }
}
