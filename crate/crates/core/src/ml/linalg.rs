//! Small dense least-squares helper. Matrices are row-major `Vec<Vec<f64>>`;
//! the column count is the feature count, so no BLAS.

use crate::error::{Error, Result};

/// Minimizes `‖A w − b‖² + ridge ‖w‖²` by Householder QR on the stacked
/// system `[A; √ridge·I] w = [b; 0]`. Working on `A` directly rather than
/// `AᵀA` keeps collinear price columns solvable at small `ridge`.
/// Returns [`Error::SingularSystem`] when a diagonal of `R` collapses.
pub fn ridge_least_squares(a: &[Vec<f64>], b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    let d = a.first().map_or(0, Vec::len);
    if d == 0 {
        return Ok(Vec::new());
    }
    let root = ridge.max(0.0).sqrt();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs: Vec<f64> = b.to_vec();
    if root > 0.0 {
        for j in 0..d {
            let mut row = vec![0.0; d];
            row[j] = root;
            m.push(row);
            rhs.push(0.0);
        }
    }
    let rows = m.len();
    let col_norm = |m: &[Vec<f64>], j: usize, from: usize| m[from..].iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
    let scale = (0..d).map(|j| col_norm(&m, j, 0)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = scale * 1e-13 * rows.max(1) as f64;
    for k in 0..d.min(rows) {
        let norm = col_norm(&m, k, k);
        if !norm.is_finite() || norm <= tol {
            return Err(Error::SingularSystem);
        }
        let alpha = if m[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = m[k..].iter().map(|r| r[k]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv > 0.0 {
            for j in k..d {
                let dot: f64 = v.iter().zip(&m[k..]).map(|(vi, r)| vi * r[j]).sum();
                let f = 2.0 * dot / vv;
                for (vi, r) in v.iter().zip(m[k..].iter_mut()) {
                    r[j] -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&rhs[k..]).map(|(vi, r)| vi * r).sum();
            let f = 2.0 * dot / vv;
            for (vi, r) in v.iter().zip(rhs[k..].iter_mut()) {
                *r -= f * vi;
            }
        }
    }
    if rows < d {
        return Err(Error::SingularSystem);
    }
    let mut w = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = rhs[i];
        for k in i + 1..d {
            sum -= m[i][k] * w[k];
        }
        if m[i][i].abs() <= tol {
            return Err(Error::SingularSystem);
        }
        w[i] = sum / m[i][i];
    }
    Ok(w)
}
