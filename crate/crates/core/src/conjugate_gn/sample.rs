use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{GnParam, GnPrior, GnRegressionModel, RegressionData};
use crate::engine::{Discrepancy, GenerativeModel, PosteriorDraws};
use crate::error::{Error, Result};
use crate::stats::{chi_square_sf, sample_gamma, sample_std_normal, StreamRng};

/// i.i.d. `N(μ, 1/λ)` observations with a scalar GN prior on `(λ, μ)`.
#[derive(Clone, Debug)]
pub struct NormalSampleModel {
    inner: GnRegressionModel,
}

impl NormalSampleModel {
    pub fn new(prior: GnPrior, n: usize) -> Result<Self> {
        if prior.dim() != 1 {
            return Err(Error::domain("normal sample model needs a scalar GN prior"));
        }
        if n < 2 {
            return Err(Error::Data("need at least two observations".into()));
        }
        Ok(NormalSampleModel {
            inner: GnRegressionModel::new(prior, DMatrix::from_element(n, 1, 1.0))?,
        })
    }

    pub fn prior(&self) -> &GnPrior {
        self.inner.prior()
    }
}

impl GenerativeModel for NormalSampleModel {
    type Param = GnParam;
    type Data = Vec<f64>;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<GnParam> {
        self.inner.sample_prior(rng)
    }

    fn sample_posterior(&self, y: &Vec<f64>, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<GnParam>> {
        self.inner.sample_posterior(&y.clone().into(), draws, rng)
    }

    fn sample_data(&self, theta: &GnParam, rng: &mut StreamRng) -> Vec<f64> {
        self.inner.sample_data(theta, rng).iter().copied().collect()
    }

    fn parameter_dim(&self) -> usize {
        2
    }

    fn data_len(&self) -> usize {
        self.inner.data_len()
    }
}

/// i.i.d. normal observations under the improper prior `π(μ, σ) ∝ 1/σ`,
/// the limit of the GN family as `a, b, c₀ → 0`. Posterior:
/// `λ ~ Gamma((n−1)/2, Q₀/2)`, `μ | λ ~ N(ȳ, 1/(nλ))`.
#[derive(Clone, Debug)]
pub struct VagueNormalModel {
    n: usize,
}

impl VagueNormalModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Data("need at least two observations".into()));
        }
        Ok(VagueNormalModel { n })
    }
}

impl GenerativeModel for VagueNormalModel {
    type Param = GnParam;
    type Data = Vec<f64>;

    fn sample_prior(&self, _rng: &mut StreamRng) -> Result<GnParam> {
        Err(Error::ImproperPrior("the vague prior π(μ, σ) ∝ 1/σ cannot be sampled".into()))
    }

    fn sample_posterior(&self, y: &Vec<f64>, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<GnParam>> {
        let data = RegressionData::location(y)?;
        let (n, q0, ybar) = (data.n() as f64, data.q0(), data.beta_hat()[0]);
        if !(q0 > 0.0) {
            return Err(Error::Data("vague posterior needs observations that are not all equal".into()));
        }
        let mut out = Vec::with_capacity(draws);
        for _ in 0..draws {
            let lambda = sample_gamma(0.5 * (n - 1.0), 0.5 * q0, rng)?;
            let mu = ybar + sample_std_normal(rng) / (n * lambda).sqrt();
            out.push(GnParam {
                lambda,
                beta: nalgebra::DVector::from_element(1, mu),
            });
        }
        Ok(PosteriorDraws::exact(out))
    }

    fn sample_data(&self, theta: &GnParam, rng: &mut StreamRng) -> Vec<f64> {
        let (mu, sd) = (theta.beta[0], theta.lambda.sqrt().recip());
        (0..self.n).map(|_| mu + sd * sample_std_normal(rng)).collect()
    }

    fn prior_is_samplable(&self) -> bool {
        false
    }

    fn parameter_dim(&self) -> usize {
        2
    }

    fn data_len(&self) -> usize {
        self.n
    }
}

/// `λ n (ȳ − μ)²`; given θ its replicate law is χ²₁.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StandardizedMeanGap;

impl Discrepancy<GnParam, Vec<f64>> for StandardizedMeanGap {
    fn evaluate(&self, y: &Vec<f64>, theta: &GnParam) -> f64 {
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        theta.lambda * n * (ybar - theta.beta[0]).powi(2)
    }

    fn reference_tail(&self, _theta: &GnParam, d: f64) -> Option<f64> {
        Some(chi_square_sf(1.0, d))
    }
}

/// `|y_(upper) − μ| − |y_(lower) − μ|` for 1-based order statistics; large
/// when the upper tail sits further from μ than the lower one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderGap {
    pub lower: usize,
    pub upper: usize,
}

impl OrderGap {
    /// Ranks `k` and `n + 1 − k`.
    pub fn symmetric(n: usize, k: usize) -> Result<Self> {
        if k == 0 || 2 * k > n {
            return Err(Error::domain(format!("rank {k} does not fit a sample of {n}")));
        }
        Ok(OrderGap { lower: k, upper: n + 1 - k })
    }
}

impl Discrepancy<GnParam, Vec<f64>> for OrderGap {
    fn evaluate(&self, y: &Vec<f64>, theta: &GnParam) -> f64 {
        let mut sorted = y.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mu = theta.beta[0];
        (sorted[self.upper - 1] - mu).abs() - (sorted[self.lower - 1] - mu).abs()
    }
}

/// The prior-strength sweep `c` of the sensitivity table, used with the
/// GN prior `(a, b, μ₀, c₀) = (c/25, c, 30, c)`.
pub const SENSITIVITY_SWEEP: [f64; 12] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0];

/// `GN(c/25, c, μ₀, c)`: prior guess σ² = 25 with strength `c`.
pub fn sweep_prior(c: f64, mu0: f64) -> Result<GnPrior> {
    GnPrior::scalar(c / 25.0, c, mu0, c)
}
