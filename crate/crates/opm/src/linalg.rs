//! Small shared linear-algebra helpers for the Gaussian modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{OpmError, Result};

/// Symmetry tolerance used by all constructors taking covariance-like input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Averages a matrix with its transpose.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Checks that `m` is square and symmetric within `SYMMETRY_TOL` relative to
/// its largest entry.
pub fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(OpmError::NotSymmetric(format!(
            "{what} is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(OpmError::NotSymmetric(format!(
                    "{what}[{i},{j}] = {} vs {what}[{j},{i}] = {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky factorization with an SPD error on failure. Zero-dimensional
/// matrices factor trivially.
pub fn cholesky_spd(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| OpmError::NotPositiveDefinite(what.to_string()))
}

/// Validates symmetry and positive definiteness in one call.
pub fn check_spd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    check_symmetric(m, what)?;
    cholesky_spd(m, what).map(|_| ())
}

/// Solves `m x = b` through a Cholesky factorization of `m`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Ok(cholesky_spd(m, what)?.solve(b))
}

/// Inverse of an SPD matrix through its Cholesky factorization.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(cholesky_spd(m, what)?.inverse())
}

/// Determinant of an SPD matrix through its Cholesky factorization.
/// The empty (0 x 0) matrix has determinant 1.
pub fn spd_determinant(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    Ok(cholesky_spd(m, what)?.determinant())
}

/// Quadratic form `d' m^-1 d` evaluated through a Cholesky solve.
pub fn mahalanobis_sq(d: &DVector<f64>, m: &DMatrix<f64>, what: &str) -> Result<f64> {
    if d.len() != m.nrows() {
        return Err(OpmError::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            d.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(d.dot(&spd_solve(m, d, what)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrize_fixes_drift() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5 + 1e-13, 0.5, 2.0]);
        let s = symmetrize(&m);
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn zero_dimensional_matrices_are_spd() {
        let m = DMatrix::<f64>::zeros(0, 0);
        assert!(check_spd(&m, "empty").is_ok());
        assert_eq!(spd_determinant(&m, "empty").unwrap(), 1.0);
    }

    #[test]
    fn non_spd_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(check_spd(&m, "m").is_err());
    }

    #[test]
    fn mahalanobis_identity_is_squared_norm() {
        let d = DVector::from_vec(vec![3.0, 4.0]);
        let m = DMatrix::identity(2, 2);
        assert!((mahalanobis_sq(&d, &m, "m").unwrap() - 25.0).abs() < 1e-12);
    }
}
