//! Closed forms for i.i.d. `N(θ, σ²)` data with known σ and a `N(θ₀, σ₀²)`
//! prior, plus the same model wired into the simulation engine.
//!
//! Everything is a function of the sample mean through
//! `z = n(ȳ − θ₀)²/σ²` and `ρ = nσ₀²/(nσ₀² + σ²)`.

use serde::{Deserialize, Serialize};

use crate::engine::{Discrepancy, GenerativeModel, PosteriorDraws};
use crate::error::{Error, Result};
use crate::stats::{
    chi_square_sf, noncentral_f_cdf, noncentral_f_excentre_inverse, normal_cdf, normal_ln_pdf,
    normal_quantile, normal_sf, sample_std_normal, StreamRng,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalNormalConfig {
    pub n: usize,
    pub sigma: f64,
    pub theta0: f64,
    /// Prior sd; zero means a point prior at `theta0`.
    pub sigma0: f64,
}

impl NormalNormalConfig {
    pub fn new(n: usize, sigma: f64, theta0: f64, sigma0: f64) -> Result<Self> {
        let cfg = NormalNormalConfig {
            n,
            sigma,
            theta0,
            sigma0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("sample size must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.theta0.is_finite() {
            return Err(Error::domain("theta0 must be finite"));
        }
        if !(self.sigma0.is_finite() && self.sigma0 >= 0.0) {
            return Err(Error::domain(format!("sigma0 must be non-negative, got {}", self.sigma0)));
        }
        Ok(())
    }

    /// `ρ = nσ₀²/(nσ₀² + σ²)`, the weight of the data in the posterior mean.
    pub fn rho(&self) -> f64 {
        let s = self.n as f64 * self.sigma0 * self.sigma0;
        s / (s + self.sigma * self.sigma)
    }

    /// `n(ȳ − θ₀)²/σ²`.
    pub fn z(&self, ybar: f64) -> f64 {
        self.n as f64 * (ybar - self.theta0).powi(2) / (self.sigma * self.sigma)
    }

    fn is_point_prior(&self) -> bool {
        self.rho() == 0.0
    }

    /// `F_{1,1}(1/ρ, 0)`: the largest ppp any data set can produce.
    pub fn ppp_ceiling(&self) -> Result<f64> {
        self.validate()?;
        if self.is_point_prior() {
            return Ok(1.0);
        }
        noncentral_f_cdf(1.0 / self.rho(), 0.0, 1)
    }

    /// ppp for discrepancy `(ȳ − θ)²` as a function of the observed mean.
    pub fn ppp_closed_form(&self, ybar: f64) -> Result<f64> {
        self.validate()?;
        if self.is_point_prior() {
            return Ok(chi_square_sf(1.0, self.z(ybar)));
        }
        let rho = self.rho();
        let v = 1.0 + self.sigma * self.sigma / (self.n as f64 * self.sigma0 * self.sigma0);
        let kappa = (1.0 - rho) * (ybar - self.theta0).powi(2) / (self.sigma0 * self.sigma0);
        noncentral_f_cdf(v, kappa, 1)
    }

    /// `m` draws of ppp(Y) with Y from the prior predictive.
    pub fn null_ppp_sample(&self, m: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        self.validate()?;
        let rho = self.rho();
        (0..m)
            .map(|_| {
                let z = sample_std_normal(rng).powi(2);
                if rho == 0.0 {
                    Ok(chi_square_sf(1.0, z))
                } else {
                    noncentral_f_cdf(1.0 / rho, (1.0 - rho) / rho * z, 1)
                }
            })
            .collect()
    }

    /// `G(u) = Pr{ppp(Y) ≤ u}` under the prior predictive.
    pub fn null_ppp_cdf(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if u.is_nan() {
            return Err(Error::domain("u is NaN"));
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        let rho = self.rho();
        if rho == 0.0 {
            return Ok(u.min(1.0));
        }
        if u >= self.ppp_ceiling()? {
            return Ok(1.0);
        }
        let q = noncentral_f_excentre_inverse(1.0 / rho, u, 1)?;
        Ok(chi_square_sf(1.0, q * rho / (1.0 - rho)))
    }

    /// cppp under the prior predictive: `Pr{χ²₁ ≥ z/(1 + nσ₀²/σ²)}`.
    pub fn cppp_closed_form(&self, ybar: f64) -> Result<f64> {
        self.validate()?;
        let inflation = 1.0 + self.n as f64 * self.sigma0 * self.sigma0 / (self.sigma * self.sigma);
        Ok(chi_square_sf(1.0, self.z(ybar) / inflation))
    }

    /// ppp calibrated against the posterior predictive of the observed data:
    /// `Pr{χ²₁(ρ²z/(1+ρ)) ≥ z/(1+ρ)}`.
    pub fn cppp_star_closed_form(&self, ybar: f64) -> Result<f64> {
        self.validate()?;
        let rho = self.rho();
        let z = self.z(ybar);
        Ok(noncentral_chisq1_sf(rho * rho * z / (1.0 + rho), z / (1.0 + rho)))
    }

    /// `|θ_tr − θ₀|/σ₀`, the limit of `√n`-scaled evidence against the prior.
    pub fn conflict_measure(&self, theta_true: f64) -> f64 {
        let gap = (theta_true - self.theta0).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.sigma0
        }
    }

    /// ppp, cppp and posterior-predictive cppp along a grid of sample means.
    pub fn curve(&self, grid: &[f64]) -> Result<Vec<CurvePoint>> {
        grid.iter()
            .map(|&ybar| {
                Ok(CurvePoint {
                    ybar,
                    ppp: self.ppp_closed_form(ybar)?,
                    cppp: self.cppp_closed_form(ybar)?,
                    cppp_star: self.cppp_star_closed_form(ybar)?,
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ybar: f64,
    pub ppp: f64,
    pub cppp: f64,
    pub cppp_star: f64,
}

/// `Pr{(N + √λ)² ≥ x}`.
fn noncentral_chisq1_sf(lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let (r, s) = (x.sqrt(), lambda.sqrt());
    normal_sf(r - s) + normal_cdf(-r - s)
}

/// Outcome of choosing the widest prior that still reaches a target cppp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorScale {
    Sigma0(f64),
    /// The data never push cppp down to α, even for a point prior.
    SharpPriorAllowed,
}

/// The prior sd at which `cppp(ȳ) = alpha` exactly, i.e. the most
/// concentrated prior around `theta0` the observed mean does not reject at
/// level α.
pub fn calibrate_prior_sigma0(
    n: usize,
    sigma: f64,
    theta0: f64,
    ybar: f64,
    alpha: f64,
) -> Result<PriorScale> {
    NormalNormalConfig::new(n, sigma, theta0, 0.0)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let z_crit = normal_quantile(1.0 - alpha / 2.0).powi(2);
    let z_obs = n as f64 * (ybar - theta0).powi(2) / (sigma * sigma);
    if z_obs < z_crit * (1.0 - 1e-12) {
        return Ok(PriorScale::SharpPriorAllowed);
    }
    Ok(PriorScale::Sigma0(
        sigma / (n as f64).sqrt() * (z_obs / z_crit - 1.0).max(0.0).sqrt(),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub theta0: f64,
    pub sigma0: f64,
}

/// A finite mixture of normal priors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixturePrior {
    components: Vec<MixtureComponent>,
}

impl MixturePrior {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::domain(format!("mixture weight must be positive, got {}", c.weight)));
            }
            if !(c.sigma0 >= 0.0 && c.sigma0.is_finite() && c.theta0.is_finite()) {
                return Err(Error::domain("mixture component needs finite mean and sd ≥ 0"));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(MixturePrior { components })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    fn config(&self, j: usize, n: usize, sigma: f64) -> Result<NormalNormalConfig> {
        let c = &self.components[j];
        NormalNormalConfig::new(n, sigma, c.theta0, c.sigma0)
    }

    /// Posterior component weights `p̃_j ∝ p_j N(ȳ; θ₀ⱼ, σ₀ⱼ² + σ²/n)`.
    pub fn posterior_weights(&self, n: usize, sigma: f64, ybar: f64) -> Result<Vec<f64>> {
        NormalNormalConfig::new(n, sigma, 0.0, 0.0)?;
        let log_w: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let sd = (c.sigma0 * c.sigma0 + sigma * sigma / n as f64).sqrt();
                c.weight.ln() + normal_ln_pdf(ybar, c.theta0, sd)
            })
            .collect();
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / total).collect())
    }

    /// ppp for discrepancy `(ȳ − θ)²`: the posterior-weighted average of the
    /// single-component closed forms.
    pub fn ppp(&self, n: usize, sigma: f64, ybar: f64) -> Result<f64> {
        let weights = self.posterior_weights(n, sigma, ybar)?;
        let mut total = 0.0;
        for (j, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                total += w * self.config(j, n, sigma)?.ppp_closed_form(ybar)?;
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }
}

/// `n(ȳ − θ)²/σ²`, whose replicate law given θ is χ²₁.
#[derive(Clone, Copy, Debug)]
pub struct StandardizedMeanDiscrepancy {
    pub sigma: f64,
}

impl Discrepancy<f64, Vec<f64>> for StandardizedMeanDiscrepancy {
    fn evaluate(&self, y: &Vec<f64>, theta: &f64) -> f64 {
        let n = y.len() as f64;
        let ybar = y.iter().sum::<f64>() / n;
        n * (ybar - theta).powi(2) / (self.sigma * self.sigma)
    }

    fn reference_tail(&self, _theta: &f64, d: f64) -> Option<f64> {
        Some(chi_square_sf(1.0, d))
    }
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

fn normal_data(theta: f64, sigma: f64, n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| theta + sigma * sample_std_normal(rng)).collect()
}

/// `(mean, sd)` of θ given ȳ under a single normal prior component.
fn component_posterior(n: usize, sigma: f64, theta0: f64, sigma0: f64, ybar: f64) -> (f64, f64) {
    if sigma0 == 0.0 {
        return (theta0, 0.0);
    }
    let prior_prec = 1.0 / (sigma0 * sigma0);
    let data_prec = n as f64 / (sigma * sigma);
    let prec = prior_prec + data_prec;
    ((prior_prec * theta0 + data_prec * ybar) / prec, prec.recip().sqrt())
}

/// The normal–normal model as a generative model for the engine.
#[derive(Clone, Copy, Debug)]
pub struct NormalNormalModel {
    pub config: NormalNormalConfig,
}

impl NormalNormalModel {
    pub fn new(config: NormalNormalConfig) -> Result<Self> {
        config.validate()?;
        Ok(NormalNormalModel { config })
    }

    pub fn discrepancy(&self) -> StandardizedMeanDiscrepancy {
        StandardizedMeanDiscrepancy { sigma: self.config.sigma }
    }
}

impl GenerativeModel for NormalNormalModel {
    type Param = f64;
    type Data = Vec<f64>;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<f64> {
        Ok(self.config.theta0 + self.config.sigma0 * sample_std_normal(rng))
    }

    fn sample_posterior(&self, y: &Vec<f64>, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<f64>> {
        let c = &self.config;
        if y.len() != c.n {
            return Err(Error::Data(format!("expected {} observations, got {}", c.n, y.len())));
        }
        let (m, s) = component_posterior(c.n, c.sigma, c.theta0, c.sigma0, mean(y));
        Ok(PosteriorDraws::exact(
            (0..draws).map(|_| m + s * sample_std_normal(rng)).collect(),
        ))
    }

    fn sample_data(&self, theta: &f64, rng: &mut StreamRng) -> Vec<f64> {
        normal_data(*theta, self.config.sigma, self.config.n, rng)
    }

    fn parameter_dim(&self) -> usize {
        1
    }

    fn data_len(&self) -> usize {
        self.config.n
    }
}

/// Normal data under a mixture-of-normals prior.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    pub prior: MixturePrior,
    pub n: usize,
    pub sigma: f64,
}

impl MixtureModel {
    pub fn new(prior: MixturePrior, n: usize, sigma: f64) -> Result<Self> {
        NormalNormalConfig::new(n, sigma, 0.0, 0.0)?;
        Ok(MixtureModel { prior, n, sigma })
    }

    pub fn discrepancy(&self) -> StandardizedMeanDiscrepancy {
        StandardizedMeanDiscrepancy { sigma: self.sigma }
    }
}

fn pick(weights: impl Iterator<Item = f64>, rng: &mut StreamRng) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, w) in weights.enumerate() {
        acc += w;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

impl GenerativeModel for MixtureModel {
    type Param = f64;
    type Data = Vec<f64>;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<f64> {
        let comps = self.prior.components();
        let c = &comps[pick(comps.iter().map(|c| c.weight), rng)];
        Ok(c.theta0 + c.sigma0 * sample_std_normal(rng))
    }

    fn sample_posterior(&self, y: &Vec<f64>, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<f64>> {
        if y.len() != self.n {
            return Err(Error::Data(format!("expected {} observations, got {}", self.n, y.len())));
        }
        let ybar = mean(y);
        let weights = self.prior.posterior_weights(self.n, self.sigma, ybar)?;
        let parts: Vec<(f64, f64)> = self
            .prior
            .components()
            .iter()
            .map(|c| component_posterior(self.n, self.sigma, c.theta0, c.sigma0, ybar))
            .collect();
        Ok(PosteriorDraws::exact(
            (0..draws)
                .map(|_| {
                    let (m, s) = parts[pick(weights.iter().copied(), rng)];
                    m + s * sample_std_normal(rng)
                })
                .collect(),
        ))
    }

    fn sample_data(&self, theta: &f64, rng: &mut StreamRng) -> Vec<f64> {
        normal_data(*theta, self.sigma, self.n, rng)
    }

    fn parameter_dim(&self) -> usize {
        1
    }

    fn data_len(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests;
