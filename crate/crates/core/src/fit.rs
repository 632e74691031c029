//! Small least-squares fits used for ratio and tail extrapolation.

use nalgebra::{DMatrix, DVector};

/// Least-squares coefficients for `y ≈ Σ_k c_k · basis_k(x)`.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &dyn Fn(f64) -> Vec<f64>) -> Option<Vec<f64>> {
    let rows = xs.len();
    let cols = basis(xs.first().copied()?).len();
    if rows < cols {
        return None;
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| basis(xs[i])[j]);
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-14).ok()?;
    Some(sol.iter().copied().collect())
}

/// Fits `y ≈ c_0 + c_1 t + ... + c_k t^k` and returns `c_0` (the value at `t = 0`).
pub fn polynomial_intercept(ts: &[f64], ys: &[f64], degree: usize) -> Option<f64> {
    // fit deviations from a reference value so that exact data stays exact
    let reference = *ys.last()?;
    let dev: Vec<f64> = ys.iter().map(|y| y - reference).collect();
    if dev.iter().all(|&d| d == 0.0) {
        return Some(reference);
    }
    let basis = |t: f64| (0..=degree).map(|k| t.powi(k as i32)).collect::<Vec<_>>();
    least_squares(ts, &dev, &basis).map(|c| reference + c[0])
}
