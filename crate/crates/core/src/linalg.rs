//! Dense symmetric positive-definite helpers for the small systems that show
//! up in the regressions (2x2, 3x3) and the AR order search (up to ~100).
//! Matrices are row-major `n * n` slices.

/// In-place lower Cholesky factor. Returns `None` when the matrix is not
/// numerically positive definite. The strict upper triangle is zeroed.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    Some(())
}

/// Solve `L z = b` for the leading `m` rows of a lower-triangular factor of
/// dimension `n`.
pub(crate) fn forward_sub(l: &[f64], n: usize, b: &[f64], m: usize) -> Vec<f64> {
    let mut z = vec![0.0; m];
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// Solve `L' x = z` using the leading `m x m` block of the factor.
pub(crate) fn backward_sub(l: &[f64], n: usize, z: &[f64], m: usize) -> Vec<f64> {
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = z[i];
        for k in (i + 1)..m {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub(crate) fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    cholesky(&mut l, n)?;
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let z = forward_sub(&l, n, &e, n);
        let x = backward_sub(&l, n, &z, n);
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

/// Least squares fit of `y` on the columns of `rows` (each row has `k`
/// regressors). Returns coefficients, `(X'X)^{-1}` and the residual sum of
/// squares.
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub xtx_inv: Vec<f64>,
    pub rss: f64,
    pub residuals: Vec<f64>,
}

pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<LeastSquares> {
    let k = rows.first()?.len();
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (r, &yt) in rows.iter().zip(y) {
        for i in 0..k {
            xty[i] += r[i] * yt;
            for j in 0..k {
                xtx[i * k + j] += r[i] * r[j];
            }
        }
    }
    // Relative pivot check: Cholesky alone accepts nearly collinear designs
    // whose pivots are pure rounding noise.
    let mut l = xtx.clone();
    cholesky(&mut l, k)?;
    for i in 0..k {
        if l[i * k + i] * l[i * k + i] <= 1e-12 * xtx[i * k + i] {
            return None;
        }
    }
    let z = forward_sub(&l, k, &xty, k);
    let coef = backward_sub(&l, k, &z, k);
    let xtx_inv = spd_inverse(&xtx, k)?;
    let residuals: Vec<f64> = rows
        .iter()
        .zip(y)
        .map(|(r, &yt)| yt - r.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let rss = residuals.iter().map(|e| e * e).sum();
    Some(LeastSquares { coef, xtx_inv, rss, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let inv = spd_inverse(&a, 2).unwrap();
        let det = 4.0 * 3.0 - 4.0;
        let expect = [3.0 / det, -2.0 / det, -2.0 / det, 4.0 / det];
        for (x, e) in inv.iter().zip(expect) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&mut a, 2).is_none());
    }

    #[test]
    fn collinear_design_is_rejected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| vec![1.0, 2.0]).collect();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(least_squares(&rows, &y).is_none());
    }
}
