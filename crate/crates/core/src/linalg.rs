//! Symmetric positive-definite helpers with conditioning checks.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest condition number accepted before a solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

fn symmetric_eigen(m: &DMatrix<f64>, what: &str) -> Result<SymmetricEigen<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::Factorization(format!("{what} is not square")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Factorization(format!("{what} has non-finite entries")));
    }
    let scale = m.amax().max(1e-300);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Factorization(format!("{what} is not symmetric")));
    }
    Ok(SymmetricEigen::new(0.5 * (m + m.transpose())))
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when it is
/// not positive definite.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    match symmetric_eigen(m, "matrix") {
        Ok(eig) => {
            let max = eig.eigenvalues.max();
            let min = eig.eigenvalues.min();
            if min <= 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Cholesky factorization that refuses indefinite or badly conditioned input.
pub fn spd_cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    let eig = symmetric_eigen(m, what)?;
    let (max, min) = (eig.eigenvalues.max(), eig.eigenvalues.min());
    if min <= 0.0 {
        return Err(Error::Factorization(format!("{what} is not positive definite")));
    }
    if max / min > MAX_CONDITION {
        return Err(Error::Factorization(format!(
            "{what} has condition number {:.3e}",
            max / min
        )));
    }
    Cholesky::new(0.5 * (m + m.transpose()))
        .ok_or_else(|| Error::Factorization(format!("{what} is not positive definite")))
}

pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(spd_cholesky(m, what)?.inverse())
}

pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Ok(spd_cholesky(m, what)?.solve(rhs))
}

/// Symmetric square root `M^{s}` for `s = ±1/2` (or any real power).
pub fn spd_power(m: &DMatrix<f64>, power: f64, what: &str) -> Result<DMatrix<f64>> {
    spd_cholesky(m, what)?;
    let eig = symmetric_eigen(m, what)?;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
    let q = &eig.eigenvectors;
    Ok(q * d * q.transpose())
}

pub fn quad_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_roots_compose() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let half = spd_power(&m, 0.5, "m").unwrap();
        let inv_half = spd_power(&m, -0.5, "m").unwrap();
        assert!((&half * &half - &m).amax() < 1e-12);
        assert!((&half * &inv_half - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((&half - half.transpose()).amax() < 1e-14);
    }

    #[test]
    fn rejects_bad_matrices() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_cholesky(&singular, "s"), Err(Error::Factorization(_))));
        let ill = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        assert!(condition_number(&ill) > MAX_CONDITION);
        assert!(spd_cholesky(&ill, "ill").is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(spd_cholesky(&asym, "asym").is_err());
    }
}
