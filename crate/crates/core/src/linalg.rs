//! Dense numeric helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Singular values, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with tolerance relative to the largest singular value.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Matrix whose columns are the given vectors.
pub fn columns(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    let rows = vectors.first().map_or(0, |v| v.len());
    DMatrix::from_fn(rows, vectors.len(), |r, c| vectors[c][r])
}

/// Least-squares solution of `a x ≈ b`.
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub residual: f64,
    pub condition: f64,
}

pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> LeastSquares {
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let eps = smax * 1e-15;
    let solution = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = (a * &solution - b).norm();
    LeastSquares { solution, residual, condition }
}

/// Unit vector spanning the numerically smallest right-singular direction,
/// plus the full singular-value profile (largest first).
pub fn smallest_right_singular(a: &DMatrix<f64>) -> (DVector<f64>, Vec<f64>) {
    let mut a = a.clone();
    if a.nrows() < a.ncols() {
        // thin SVD would drop the null directions
        let cols = a.ncols();
        a = a.resize_vertically(cols, 0.0);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let s = &svd.singular_values;
    let (idx, _) = s
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty matrix");
    let v = v_t.row(idx).transpose();
    let mut profile: Vec<f64> = s.iter().copied().collect();
    profile.sort_by(|x, y| y.total_cmp(x));
    (v, profile)
}
