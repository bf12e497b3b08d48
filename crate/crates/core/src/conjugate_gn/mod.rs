//! The gamma–normal conjugate family for normal regression with unknown
//! error precision λ = 1/σ².
//!
//! Prior: `λ ~ Gamma(a/2, rate b/2)`, `β | λ ~ N_p(β₀, (λ c₀ Ω₀)⁻¹)`.
//! The scalar location model is the regression on a column of ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_cholesky, spd_inverse};

mod model;
mod ppp;
mod sample;

pub use model::{GnParam, GnRegressionModel, PrecisionWeightedDiscrepancy};
pub use ppp::{
    cppp_regression_known_sigma_closed, cppp_regression_proportional, null_ppp_regression_proportional,
    ppp_gn_scalar, ppp_proportional, ppp_regression_gn, ppp_regression_known_sigma,
    ppp_regression_known_sigma_proportional, IntegralMethod, ProportionalCalibration,
    DEFAULT_GAMMA_DRAWS,
};
pub use sample::{
    sweep_prior, NormalSampleModel, OrderGap, StandardizedMeanGap, VagueNormalModel, SENSITIVITY_SWEEP,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnPrior {
    pub a: f64,
    pub b: f64,
    pub beta0: DVector<f64>,
    pub c0: f64,
    pub omega0: DMatrix<f64>,
}

impl GnPrior {
    pub fn new(a: f64, b: f64, beta0: DVector<f64>, c0: f64, omega0: DMatrix<f64>) -> Result<Self> {
        let prior = GnPrior {
            a,
            b,
            beta0,
            c0,
            omega0,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Location model: `μ | λ ~ N(μ₀, 1/(λ c₀))`.
    pub fn scalar(a: f64, b: f64, mu0: f64, c0: f64) -> Result<Self> {
        GnPrior::new(a, b, DVector::from_element(1, mu0), c0, DMatrix::identity(1, 1))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c0", self.c0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let p = self.beta0.len();
        if p == 0 || self.omega0.nrows() != p || self.omega0.ncols() != p {
            return Err(Error::domain("omega0 must be p×p with p = len(beta0) ≥ 1"));
        }
        if self.beta0.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("beta0 must be finite"));
        }
        spd_cholesky(&self.omega0, "omega0")?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    /// `c₀ Ω₀`, the prior precision of β in units of λ.
    pub fn precision(&self) -> DMatrix<f64> {
        &self.omega0 * self.c0
    }
}

/// Design and response with the least-squares summaries precomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionData {
    x: DMatrix<f64>,
    y: DVector<f64>,
    omega_n: DMatrix<f64>,
    beta_hat: DVector<f64>,
    q0: f64,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::Data(format!("design has {n} rows but response has {} values", y.len())));
        }
        if p == 0 || n <= p {
            return Err(Error::Data(format!("need n > p ≥ 1, got n={n}, p={p}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("design and response must be finite".into()));
        }
        let omega_n = x.transpose() * &x;
        let chol = spd_cholesky(&omega_n, "XᵀX")
            .map_err(|e| Error::Data(format!("design is rank deficient or ill conditioned: {e}")))?;
        let beta_hat = chol.solve(&(x.transpose() * &y));
        let resid = &y - &x * &beta_hat;
        let q0 = resid.norm_squared();
        Ok(RegressionData {
            x,
            y,
            omega_n,
            beta_hat,
            q0,
        })
    }

    /// i.i.d. sample as a regression on a column of ones.
    pub fn location(y: &[f64]) -> Result<Self> {
        RegressionData::new(DMatrix::from_element(y.len(), 1, 1.0), DVector::from_column_slice(y))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `Ω_n = XᵀX`.
    pub fn omega_n(&self) -> &DMatrix<f64> {
        &self.omega_n
    }

    pub fn beta_hat(&self) -> &DVector<f64> {
        &self.beta_hat
    }

    /// Residual sum of squares.
    pub fn q0(&self) -> f64 {
        self.q0
    }

    /// `(β̂ − β₀)ᵀ Ω_n (β̂ − β₀) / n`.
    pub fn kappa_n(&self, beta0: &DVector<f64>) -> f64 {
        quad_form(&self.omega_n, &(&self.beta_hat - beta0)) / self.n() as f64
    }

    /// Hat matrix `X Ω_n⁻¹ Xᵀ`.
    pub fn hat_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(&self.x * spd_inverse(&self.omega_n, "XᵀX")? * self.x.transpose())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnPosterior {
    pub a_n: f64,
    pub b_n: f64,
    pub beta_tilde: DVector<f64>,
    /// `c₀Ω₀ + Ω_n`.
    pub precision: DMatrix<f64>,
    /// `(c₀⁻¹Ω₀⁻¹ + Ω_n⁻¹)⁻¹`; absent when no data were seen.
    pub k: Option<DMatrix<f64>>,
}

impl GnPosterior {
    /// The posterior before any data.
    pub fn from_prior(prior: &GnPrior) -> Self {
        GnPosterior {
            a_n: prior.a,
            b_n: prior.b,
            beta_tilde: prior.beta0.clone(),
            precision: prior.precision(),
            k: None,
        }
    }

    /// The posterior as a prior for further data (`c₀ = 1`, `Ω₀` = precision).
    pub fn as_prior(&self) -> Result<GnPrior> {
        GnPrior::new(self.a_n, self.b_n, self.beta_tilde.clone(), 1.0, self.precision.clone())
    }
}

/// Completes the square in `x` for a sum of two quadratic forms:
/// `(x−a₀)ᵀG₀(x−a₀) + (x−a₁)ᵀG₁(x−a₁) = (x−ã)ᵀ(G₀+G₁)(x−ã) + (a₁−a₀)ᵀM(a₁−a₀)`
/// with `ã = (G₀+G₁)⁻¹(G₀a₀ + G₁a₁)` and `M = (G₀⁻¹ + G₁⁻¹)⁻¹`.
pub fn complete_square(
    a0: &DVector<f64>,
    g0: &DMatrix<f64>,
    a1: &DVector<f64>,
    g1: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let p = a0.len();
    if a1.len() != p || g0.shape() != (p, p) || g1.shape() != (p, p) {
        return Err(Error::domain("dimensions of the two quadratic forms differ"));
    }
    let total = spd_cholesky(&(g0 + g1), "G₀ + G₁")?;
    let a_tilde = total.solve(&(g0 * a0 + g1 * a1));
    // G₀(G₀+G₁)⁻¹G₁ equals (G₀⁻¹ + G₁⁻¹)⁻¹ and needs only the one factorization.
    let m = g0 * total.solve(g1);
    Ok((a_tilde, 0.5 * (&m + m.transpose())))
}

/// Conjugate update of a GN prior with regression data.
pub fn gn_update(prior: &GnPrior, data: &RegressionData) -> Result<GnPosterior> {
    prior.validate()?;
    if data.p() != prior.dim() {
        return Err(Error::Data(format!(
            "prior has dimension {} but design has {} columns",
            prior.dim(),
            data.p()
        )));
    }
    let (beta_tilde, k) = complete_square(&prior.beta0, &prior.precision(), &data.beta_hat, &data.omega_n)?;
    let b_n = prior.b + data.q0 + quad_form(&k, &(&data.beta_hat - &prior.beta0));
    Ok(GnPosterior {
        a_n: prior.a + data.n() as f64,
        b_n,
        beta_tilde,
        precision: prior.precision() + &data.omega_n,
        k: Some(k),
    })
}
