//! Small dense linear algebra helpers on top of `nalgebra`.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of the pivoted R factor (after unit
/// column scaling) below which a column counts as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}

/// Solves `min sum_i w_i (y_i - x_i . b)^2` through a column-pivoted QR of
/// the row-scaled, column-normalized design.
///
/// Rank deficiency is an error naming the columns that pivoting pushed past
/// the numerical rank; nothing is silently pseudo-inverted.
pub fn weighted_lstsq(
    x: &DMatrix<f64>,
    y: &[f64],
    w: Option<&[f64]>,
    names: &[String],
) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if let Some(w) = w {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
    }
    if n < p {
        return Err(Error::InvalidInput(format!(
            "need at least {p} rows for {p} coefficients, got {n}"
        )));
    }
    let sw: Vec<f64> = match w {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; n],
    };
    let mut a = x.clone();
    for (i, s) in sw.iter().enumerate() {
        a.row_mut(i).scale_mut(*s);
    }
    let col_name = |j: usize| {
        names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("column {j}"))
    };
    let scales: Vec<f64> = (0..p).map(|j| a.column(j).norm()).collect();
    let zero: Vec<String> = (0..p).filter(|&j| scales[j] == 0.0).map(col_name).collect();
    if !zero.is_empty() {
        return Err(Error::RankDeficient { columns: zero });
    }
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let b = DVector::from_iterator(n, y.iter().zip(&sw).map(|(y, s)| y * s));

    let qr = a.col_piv_qr();
    let r = qr.r();
    let r00 = r[(0, 0)].abs();
    let rank = (0..p)
        .take_while(|&k| r[(k, k)].abs() > RANK_TOLERANCE * r00)
        .count();
    if rank < p {
        let mut order = DMatrix::<f64>::from_fn(1, p, |_, j| j as f64);
        qr.p().permute_columns(&mut order);
        let dependent = (rank..p).map(|k| col_name(order[(0, k)] as usize)).collect();
        return Err(Error::RankDeficient { columns: dependent });
    }
    let mut qtb = b;
    qr.q_tr_mul(&mut qtb);
    let mut sol = r
        .view((0, 0), (p, p))
        .solve_upper_triangular(&qtb.rows(0, p))
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    qr.p().inv_permute_rows(&mut sol);
    Ok(sol.iter().zip(&scales).map(|(c, s)| c / s).collect())
}

/// Solves the symmetric positive definite system `a x = b` by Cholesky.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.cholesky().map(|c| c.solve(b))
}

/// Matrix-vector product `x b` as a plain vector.
pub fn mat_vec(x: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    (x * DVector::from_column_slice(b)).data.into()
}
