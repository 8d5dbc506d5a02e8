//! Small dense linear-algebra helpers used by sampled rank checks.

use nalgebra::{DMatrix, DVector};

use crate::forms::DifferentialForm;
use crate::symexpr::{Assignment, EvalError};

/// Numerical rank with a relative singular-value cutoff.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Matrix of the linear map `X ↦ i(X)α` at a point: one column per frame
/// coordinate, one row per index tuple of degree `deg α − 1`.
pub fn contraction_matrix(alpha: &DifferentialForm, at: &Assignment) -> Result<DMatrix<f64>, EvalError> {
    let dim = alpha.frame().dim();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for idx in alpha.terms().keys() {
        for s in 0..idx.len() {
            let mut r = idx.clone();
            r.remove(s);
            rows.push(r);
        }
    }
    rows.sort();
    rows.dedup();
    let mut m = DMatrix::zeros(rows.len(), dim);
    for (idx, c) in alpha.terms() {
        let v = c.eval(at)?;
        for (s, &j) in idx.iter().enumerate() {
            let mut r = idx.clone();
            r.remove(s);
            let row = rows.binary_search(&r).expect("row collected above");
            let sign = if s % 2 == 1 { -1.0 } else { 1.0 };
            m[(row, j)] += sign * v;
        }
    }
    Ok(m)
}

/// Affine solution set `x₀ + N·c` of `A x = b`, or `None` when inconsistent.
/// `N` has orthonormal columns spanning the kernel.
pub fn affine_solutions(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let cols = a.ncols();
    if a.nrows() == 0 {
        return Some((DVector::zeros(cols), DMatrix::identity(cols, cols)));
    }
    // pad to at least square so the SVD returns a full right basis
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let mut rhs = DVector::zeros(rows);
    rhs.rows_mut(0, a.nrows()).copy_from(b);
    let svd = padded.svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * top.max(1.0);
    let x0 = svd.solve(&rhs, cut).ok()?;
    let scale = 1.0 + b.amax() + top * x0.amax();
    if (a * &x0 - b).amax() > 1e-8 * scale {
        return None;
    }
    let v_t = svd.v_t.as_ref().expect("requested");
    let null: Vec<_> = (0..cols)
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| v_t.row(i).transpose())
        .collect();
    let n = if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    Some((x0, n))
}
