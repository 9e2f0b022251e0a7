//! Small dense helpers shared by the variational updates.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Relative jitter ladder tried when a Cholesky factorisation fails.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn cholesky_with_jitter(a: &Matrix, factor: &str) -> Result<Cholesky<f64, Dyn>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).sum::<f64>() / n.max(1) as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    for (step, jitter) in JITTER_LADDER.iter().enumerate() {
        let mut b = a.clone();
        if *jitter > 0.0 {
            for i in 0..n {
                b[(i, i)] += jitter * scale;
            }
        }
        if let Some(chol) = Cholesky::new(b) {
            if step > 0 {
                log::warn!("{factor}: Cholesky needed relative jitter {jitter:e}");
            }
            return Ok(chol);
        }
    }
    Err(Error::numerical(
        factor,
        "matrix not positive definite after jitter escalation",
    ))
}

/// Inverse and log-determinant of a symmetric positive definite precision
/// matrix. The returned covariance is exactly symmetric and the log-determinant
/// is that of the covariance (i.e. minus that of `precision`).
pub fn spd_inverse(precision: &Matrix, factor: &str) -> Result<(Matrix, f64)> {
    if precision.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(factor, "non-finite precision matrix"));
    }
    let chol = cholesky_with_jitter(precision, factor)?;
    let logdet_prec: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mut cov = chol.inverse();
    symmetrize(&mut cov);
    Ok((cov, -logdet_prec))
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn spd_logdet(m: &Matrix, factor: &str) -> Result<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(factor, "non-finite covariance"));
    }
    let chol =
        Cholesky::new(m.clone()).ok_or_else(|| Error::numerical(factor, "covariance is not positive definite"))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// True if `m + tol * mean(diag m) * I` admits a Cholesky factorisation.
pub fn is_psd_repairable(m: &Matrix, tol: f64) -> bool {
    let n = m.nrows();
    if n == 0 {
        return true;
    }
    let scale = (0..n).map(|i| m[(i, i)].abs()).sum::<f64>() / n as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut b = m.clone();
    for i in 0..n {
        b[(i, i)] += tol * scale;
    }
    Cholesky::new(b).is_some()
}

/// `sum_ij a_ij * b_ij`, i.e. `tr(A^T B)`.
pub fn frobenius_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest absolute asymmetry `max |m_ij - m_ji|`.
pub fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_logdet_of_diagonal() {
        let p = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0]));
        let (c, ld) = spd_inverse(&p, "test").unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((c[(1, 1)] - 0.25).abs() < 1e-15);
        assert!((ld - (0.125f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rescued_by_jitter() {
        let p = Matrix::from_element(3, 3, 1.0);
        let (c, _) = spd_inverse(&p, "test").unwrap();
        assert!(c.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn indefinite_matrix_is_an_error() {
        let p = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = spd_inverse(&p, "q(A)").unwrap_err();
        assert!(err.to_string().contains("q(A)"));
    }
}
