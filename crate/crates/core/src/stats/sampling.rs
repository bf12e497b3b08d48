//! Samplers for the posterior and data-generating representations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Gamma variate with the given shape and *rate*.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("gamma needs shape, rate > 0 (got {shape}, {rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Central chi-square; `df` may be fractional.
pub fn sample_chisq<R: Rng + ?Sized>(df: f64, rng: &mut R) -> Result<f64> {
    let c = ChiSquared::new(df).map_err(|e| Error::domain(e.to_string()))?;
    Ok(c.sample(rng))
}

/// `(Z + √κ)² + χ²_{df−1}`.
pub fn sample_noncentral_chisq<R: Rng + ?Sized>(df: u32, kappa: f64, rng: &mut R) -> Result<f64> {
    if df == 0 || !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("noncentral chi-square needs df >= 1, κ >= 0 (got {df}, {kappa})")));
    }
    let z: f64 = sample_std_normal(rng) + kappa.sqrt();
    let rest = if df > 1 { sample_chisq((df - 1) as f64, rng)? } else { 0.0 };
    Ok(z * z + rest)
}

/// Lower-triangular factor `L` with `L Lᵀ = covariance`.
pub fn cholesky_factor(covariance: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !covariance.is_square() {
        return Err(Error::Factorization("covariance must be square".into()));
    }
    covariance
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Factorization("covariance is not positive definite".into()))
}

/// `mean + L z` with `z` standard normal.
pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    covariance_factor: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let p = mean.len();
    if covariance_factor.nrows() != p || covariance_factor.ncols() != p {
        return Err(Error::domain("covariance factor does not match the mean's dimension"));
    }
    if (0..p).any(|i| !(covariance_factor[(i, i)] > 0.0)) {
        return Err(Error::Factorization("covariance factor must have a positive diagonal".into()));
    }
    let z = DVector::from_fn(p, |_, _| sample_std_normal(rng));
    Ok(mean + covariance_factor.lower_triangle() * z)
}

/// Multinomial counts for `trials` over `probs` (which need not sum to one
/// exactly; the last cell takes the remainder).
pub fn sample_multinomial<R: Rng + ?Sized>(trials: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = trials;
    let mut mass_left = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        out[i] = k;
        remaining -= k;
        mass_left -= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ecdf::{ks_distance, EmpiricalCdf};
    use crate::stats::rng::RngStream;
    use crate::stats::special::chi_square_cdf;

    #[test]
    fn exponential_mean() {
        let mut rng = RngStream::new(1).rng();
        let n = 1_000_000;
        let m: f64 = (0..n).map(|_| sample_gamma(1.0, 1.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 1.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn gamma_rate_parameterization() {
        let mut rng = RngStream::new(2).rng();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| sample_gamma(3.0, 6.0, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 0.005, "{m}");
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn noncentral_chisq_at_zero_is_central() {
        let mut rng = RngStream::new(3).rng();
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_noncentral_chisq(1, 0.0, &mut rng).unwrap())
            .collect();
        let d = ks_distance(&EmpiricalCdf::new(&draws), |x| chi_square_cdf(1.0, x));
        assert!(d < 0.002, "{d}");
    }

    #[test]
    fn noncentral_chisq_mean() {
        let mut rng = RngStream::new(4).rng();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| sample_noncentral_chisq(3, 2.5, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 5.5).abs() < 0.05, "{m}");
    }

    #[test]
    fn mvnormal_identity_covariance() {
        let mut rng = RngStream::new(5).rng();
        let p = 3;
        let mean = DVector::zeros(p);
        let l = DMatrix::identity(p, p);
        let n = 200_000;
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for _ in 0..n {
            let x = sample_mvnormal(&mean, &l, &mut rng).unwrap();
            cov += &x * x.transpose();
        }
        cov /= n as f64;
        for i in 0..p {
            for j in 0..p {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - want).abs() < 0.01, "{cov}");
            }
        }
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_factor(&m), Err(Error::Factorization(_))));
    }

    #[test]
    fn multinomial_means() {
        let mut rng = RngStream::new(6).rng();
        let probs = [0.2, 0.5, 0.3];
        let reps = 20_000;
        let mut tot = [0u64; 3];
        for _ in 0..reps {
            let c = sample_multinomial(10, &probs, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 10);
            for i in 0..3 {
                tot[i] += c[i];
            }
        }
        for i in 0..3 {
            let m = tot[i] as f64 / reps as f64;
            assert!((m - 10.0 * probs[i]).abs() < 0.05);
        }
    }
}
