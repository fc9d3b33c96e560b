//! Small dense linear algebra: Householder least squares for tall, thin
//! design matrices and fixed 3x3 helpers for the dynamical system.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat3_identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn mat3_max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max(libm::fabs(a[i][j] - b[i][j]));
        }
    }
    worst
}

/// Solution of `min ||y - X b||` for a full column rank `X`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X^T X)^{-1}`, row-major `k x k`.
    pub xtx_inverse: Vec<f64>,
}

/// Relative pivot size below which a column is treated as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-10;

/// Householder QR least squares. `columns` are the columns of `X`, each of
/// length `y.len()`.
pub fn least_squares(y: &[f64], columns: &[&[f64]]) -> Result<LeastSquares> {
    let n = y.len();
    let k = columns.len();
    if k == 0 {
        return Err(Error::Config(
            "least squares needs at least one column".into(),
        ));
    }
    for col in columns {
        if col.len() != n {
            return Err(Error::Alignment {
                what: "regressor column vs regressand",
                expected: n,
                found: col.len(),
            });
        }
    }
    if n <= k {
        return Err(Error::InsufficientData {
            what: "least squares (rows must exceed columns)",
            needed: k + 1,
            available: n,
        });
    }
    if y.iter()
        .chain(columns.iter().flat_map(|c| c.iter()))
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("least squares input"));
    }

    // Column-major working copy.
    let mut a: Vec<f64> = columns.iter().flat_map(|c| c.iter().copied()).collect();
    let mut qty = y.to_vec();
    let col_norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let mut diag = vec![0.0; k];

    for j in 0..k {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let col = &mut head[j * n..];
        let alpha = norm(&col[j..]);
        if alpha == 0.0 || alpha <= RANK_TOLERANCE * col_norms[j] {
            return Err(Error::Singular);
        }
        let alpha = if col[j] > 0.0 { -alpha } else { alpha };
        // v = x - alpha e_1, stored in place.
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        diag[j] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |target: &mut [f64]| {
            let dot: f64 = col[j..].iter().zip(&target[j..]).map(|(v, t)| v * t).sum();
            let scale = 2.0 * dot / vnorm2;
            for (t, v) in target[j..].iter_mut().zip(&col[j..]) {
                *t -= scale * v;
            }
        };
        for other in tail.chunks_mut(n) {
            reflect(other);
        }
        reflect(&mut qty);
    }

    // R has diag[j] on the diagonal and a[c*n + r] (r < c) above it.
    let r_at = |r: usize, c: usize| if r == c { diag[r] } else { a[c * n + r] };

    let mut coefficients = vec![0.0; k];
    for r in (0..k).rev() {
        let mut acc = qty[r];
        for (c, coef) in coefficients.iter().enumerate().skip(r + 1) {
            acc -= r_at(r, c) * coef;
        }
        coefficients[r] = acc / diag[r];
    }

    // R^{-1}, upper triangular.
    let mut r_inv = vec![0.0; k * k];
    for c in 0..k {
        r_inv[c * k + c] = 1.0 / diag[c];
        for r in (0..c).rev() {
            let mut acc = 0.0;
            for m in r + 1..=c {
                acc += r_at(r, m) * r_inv[m * k + c];
            }
            r_inv[r * k + c] = -acc / diag[r];
        }
    }
    let mut xtx_inverse = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            xtx_inverse[i * k + j] = (i.max(j)..k)
                .map(|m| r_inv[i * k + m] * r_inv[j * k + m])
                .sum();
        }
    }

    let residuals = (0..n)
        .map(|i| {
            y[i] - columns
                .iter()
                .zip(&coefficients)
                .map(|(c, b)| c[i] * b)
                .sum::<f64>()
        })
        .collect();

    Ok(LeastSquares {
        coefficients,
        residuals,
        xtx_inverse,
    })
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large index levels.
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(libm::fabs(*x)));
    if scale == 0.0 {
        return 0.0;
    }
    scale * libm::sqrt(v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let ones = [1.0; 4];
        let y = [3.0, 5.0, 7.0, 9.0];
        let fit = least_squares(&y, &[&ones, &x]).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn xtx_inverse_matches_closed_form() {
        // For [1, x] the inverse of X^T X is known in closed form.
        let x = [0.5, -1.0, 2.0, 3.5, 0.0];
        let ones = [1.0; 5];
        let y = [1.0, 0.0, 2.0, 1.0, 3.0];
        let fit = least_squares(&y, &[&ones, &x]).unwrap();
        let n = 5.0;
        let sx: f64 = x.iter().sum();
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let det = n * sxx - sx * sx;
        let expected = [sxx / det, -sx / det, -sx / det, n / det];
        for (a, b) in fit.xtx_inverse.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_columns_are_singular() {
        let ones = [1.0; 4];
        let twos = [2.0; 4];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            least_squares(&y, &[&ones, &twos]).unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn too_few_rows() {
        let ones = [1.0; 2];
        let x = [1.0, 2.0];
        assert!(matches!(
            least_squares(&[1.0, 2.0], &[&ones, &x]),
            Err(Error::InsufficientData { .. })
        ));
    }
}
