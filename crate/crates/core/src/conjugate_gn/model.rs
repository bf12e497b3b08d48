use nalgebra::{DMatrix, DVector};

use super::{gn_update, GnPrior, RegressionData};
use crate::engine::{Discrepancy, GenerativeModel, PosteriorDraws};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_cholesky};
use crate::stats::{chi_square_sf, sample_gamma, sample_std_normal, StreamRng};

#[derive(Clone, Debug, PartialEq)]
pub struct GnParam {
    pub lambda: f64,
    pub beta: DVector<f64>,
}

/// `L⁻ᵀ z / √λ` for `precision = L Lᵀ`, i.e. a draw from `N(0, (λ·precision)⁻¹)`.
fn precision_normal(l: &DMatrix<f64>, lambda: f64, rng: &mut StreamRng) -> DVector<f64> {
    let z = DVector::from_fn(l.nrows(), |_, _| sample_std_normal(rng));
    let u = l
        .transpose()
        .solve_upper_triangular(&z)
        .expect("Cholesky factor has a positive diagonal");
    u / lambda.sqrt()
}

/// Prior precision draws are floored here so that replicate data stay
/// finite (and their squares summable) under very diffuse priors, where
/// the gamma draw can underflow to zero.
pub const PRIOR_PRECISION_FLOOR: f64 = 1e-200;

/// Normal regression with a GN prior and a fixed design.
#[derive(Clone, Debug)]
pub struct GnRegressionModel {
    prior: GnPrior,
    x: DMatrix<f64>,
    prior_factor: DMatrix<f64>,
}

impl GnRegressionModel {
    pub fn new(prior: GnPrior, x: DMatrix<f64>) -> Result<Self> {
        prior.validate()?;
        if x.ncols() != prior.dim() {
            return Err(Error::Data(format!(
                "design has {} columns, prior has dimension {}",
                x.ncols(),
                prior.dim()
            )));
        }
        let prior_factor = spd_cholesky(&prior.precision(), "c₀Ω₀")?.l();
        Ok(GnRegressionModel {
            prior,
            x,
            prior_factor,
        })
    }

    pub fn prior(&self) -> &GnPrior {
        &self.prior
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `λ (β̂(y) − β)ᵀ Ω_n (β̂(y) − β)` for this design.
    pub fn discrepancy(&self) -> Result<PrecisionWeightedDiscrepancy> {
        PrecisionWeightedDiscrepancy::new(&self.x)
    }
}

impl GenerativeModel for GnRegressionModel {
    type Param = GnParam;
    type Data = DVector<f64>;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<GnParam> {
        let lambda = sample_gamma(0.5 * self.prior.a, 0.5 * self.prior.b, rng)?.max(PRIOR_PRECISION_FLOOR);
        let beta = &self.prior.beta0 + precision_normal(&self.prior_factor, lambda, rng);
        Ok(GnParam { lambda, beta })
    }

    fn sample_posterior(
        &self,
        y: &DVector<f64>,
        draws: usize,
        rng: &mut StreamRng,
    ) -> Result<PosteriorDraws<GnParam>> {
        let data = RegressionData::new(self.x.clone(), y.clone())?;
        let post = gn_update(&self.prior, &data)?;
        let l = spd_cholesky(&post.precision, "posterior precision")?.l();
        let mut out = Vec::with_capacity(draws);
        for _ in 0..draws {
            let lambda = sample_gamma(0.5 * post.a_n, 0.5 * post.b_n, rng)?;
            let beta = &post.beta_tilde + precision_normal(&l, lambda, rng);
            out.push(GnParam { lambda, beta });
        }
        Ok(PosteriorDraws::exact(out))
    }

    fn sample_data(&self, theta: &GnParam, rng: &mut StreamRng) -> DVector<f64> {
        let sd = theta.lambda.sqrt().recip();
        let noise = DVector::from_fn(self.x.nrows(), |_, _| sd * sample_std_normal(rng));
        &self.x * &theta.beta + noise
    }

    fn parameter_dim(&self) -> usize {
        self.prior.dim() + 1
    }

    fn data_len(&self) -> usize {
        self.x.nrows()
    }
}

/// `λ (β̂(y) − β)ᵀ Ω_n (β̂(y) − β)`; given θ its replicate law is χ²_p.
#[derive(Clone, Debug)]
pub struct PrecisionWeightedDiscrepancy {
    omega_n: DMatrix<f64>,
    projection: DMatrix<f64>,
}

impl PrecisionWeightedDiscrepancy {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let omega_n = x.transpose() * x;
        let projection = spd_cholesky(&omega_n, "XᵀX")?.solve(&x.transpose());
        Ok(PrecisionWeightedDiscrepancy { omega_n, projection })
    }
}

impl Discrepancy<GnParam, DVector<f64>> for PrecisionWeightedDiscrepancy {
    fn evaluate(&self, y: &DVector<f64>, theta: &GnParam) -> f64 {
        let diff = &self.projection * y - &theta.beta;
        theta.lambda * quad_form(&self.omega_n, &diff)
    }

    fn reference_tail(&self, _theta: &GnParam, d: f64) -> Option<f64> {
        Some(chi_square_sf(self.omega_n.nrows() as f64, d))
    }
}
