use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::StreamRng;

/// What the engine needs from a prior/model pair: draws from the prior, from
/// the posterior given data, and data given parameters.
///
/// `sample_data ∘ sample_prior` is the prior-predictive law the calibration
/// is taken under; `sample_posterior` must target the posterior for the same
/// prior and model.
pub trait GenerativeModel: Sync {
    type Param: Clone + Send + Sync;
    type Data: Clone + Send + Sync;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<Self::Param>;

    /// `draws` parameter values from the posterior given `y`. Markov-chain
    /// samplers handle their own burn-in and thinning and report it through
    /// the diagnostics.
    fn sample_posterior(
        &self,
        y: &Self::Data,
        draws: usize,
        rng: &mut StreamRng,
    ) -> Result<PosteriorDraws<Self::Param>>;

    fn sample_data(&self, theta: &Self::Param, rng: &mut StreamRng) -> Self::Data;

    /// False for improper or otherwise non-samplable priors.
    fn prior_is_samplable(&self) -> bool {
        true
    }

    fn parameter_dim(&self) -> usize;

    fn data_len(&self) -> usize;
}

/// A discrepancy `D(y, θ)`.
pub trait Discrepancy<P, Y>: Sync {
    fn evaluate(&self, y: &Y, theta: &P) -> f64;

    /// `Pr{D(y_rep, θ) ≥ d}` when the law of the replicate discrepancy is
    /// known in closed form; enables the Rao-Blackwellized estimator.
    fn reference_tail(&self, _theta: &P, _d: f64) -> Option<f64> {
        None
    }
}

impl<P, Y, F> Discrepancy<P, Y> for F
where
    F: Fn(&Y, &P) -> f64 + Sync,
{
    fn evaluate(&self, y: &Y, theta: &P) -> f64 {
        self(y, theta)
    }
}

/// Posterior draws plus whatever the sampler reports about itself.
#[derive(Clone, Debug)]
pub struct PosteriorDraws<P> {
    pub draws: Vec<P>,
    pub diagnostics: Option<ChainDiagnostics>,
}

impl<P> PosteriorDraws<P> {
    pub fn exact(draws: Vec<P>) -> Self {
        PosteriorDraws {
            draws,
            diagnostics: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub acceptance_rate: f64,
    /// One effective sample size per parameter coordinate.
    pub effective_sample_size: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Something that produces whole data sets, used as the "what-if"
/// generating mechanism for alternative calibrations.
pub trait DataSampler<Y>: Sync {
    fn sample(&self, rng: &mut StreamRng) -> Result<Y>;
}

impl<Y, F> DataSampler<Y> for F
where
    F: Fn(&mut StreamRng) -> Result<Y> + Sync,
{
    fn sample(&self, rng: &mut StreamRng) -> Result<Y> {
        self(rng)
    }
}

/// `θ ~ prior`, `Y ~ f(·|θ)`.
pub struct PriorPredictive<'a, M>(pub &'a M);

impl<M: GenerativeModel> DataSampler<M::Data> for PriorPredictive<'_, M> {
    fn sample(&self, rng: &mut StreamRng) -> Result<M::Data> {
        let theta = self.0.sample_prior(rng)?;
        Ok(self.0.sample_data(&theta, rng))
    }
}

/// `θ ~ posterior(y_obs)`, `Y ~ f(·|θ)`, with θ picked uniformly from a
/// fixed pool of posterior draws.
pub struct PosteriorPredictive<'a, M: GenerativeModel> {
    model: &'a M,
    pool: Vec<M::Param>,
}

impl<'a, M: GenerativeModel> PosteriorPredictive<'a, M> {
    pub fn new(model: &'a M, y_obs: &M::Data, pool_size: usize, rng: &mut StreamRng) -> Result<Self> {
        let pool = model.sample_posterior(y_obs, pool_size.max(1), rng)?.draws;
        Ok(PosteriorPredictive { model, pool })
    }
}

impl<M: GenerativeModel> DataSampler<M::Data> for PosteriorPredictive<'_, M> {
    fn sample(&self, rng: &mut StreamRng) -> Result<M::Data> {
        use rand::Rng;
        let theta = &self.pool[rng.random_range(0..self.pool.len())];
        Ok(self.model.sample_data(theta, rng))
    }
}
