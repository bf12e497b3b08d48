//! Dirichlet-process and parametric normal models checked with the scaled
//! Kolmogorov–Smirnov discrepancy `√n sup_t |F_n(t) − F(t)|`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conjugate_gn::{GnParam, GnPrior, NormalSampleModel};
use crate::engine::{
    calibrate_cppp, estimate_ppp, CalibrationOptions, CpppEstimate, Discrepancy, GenerativeModel,
    PosteriorDraws, PppEstimate, PppOptions,
};
use crate::error::{Error, Result};
use crate::stats::{ks_distance, normal_cdf, sample_gamma, sample_std_normal, RngStream, StepCdf, StreamRng};

/// Bound on the expected stick mass left over after truncation.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Normal centre distribution `F₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalBase {
    pub mean: f64,
    pub sd: f64,
}

impl NormalBase {
    pub fn cdf(&self, t: f64) -> f64 {
        normal_cdf((t - self.mean) / self.sd)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mean + self.sd * sample_std_normal(rng)
    }
}

/// `Dir(a F₀)` with a truncated stick-breaking representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpPrior {
    pub a: f64,
    pub base: NormalBase,
    pub truncation: usize,
}

/// Smallest `L` with `(a/(a+1))^L < tolerance`.
pub fn default_truncation(a: f64) -> usize {
    let ratio = a / (a + 1.0);
    if ratio <= 0.0 {
        return 1;
    }
    ((TRUNCATION_TOLERANCE.ln() / ratio.ln()).floor() as usize + 1).max(1)
}

impl DpPrior {
    pub fn new(a: f64, base: NormalBase) -> Result<Self> {
        Self::check(a, base)?;
        Ok(DpPrior {
            a,
            base,
            truncation: default_truncation(a),
        })
    }

    /// Concentration 1 and `F₀ = N(mean, variance)` of `data`.
    pub fn centred_on(data: &[f64]) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::Data("need at least two observations to centre F₀".into()));
        }
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self::new(1.0, NormalBase { mean, sd: var.sqrt() })
    }

    /// Explicit truncation level; rejected if the expected leftover stick
    /// mass would exceed the tolerance.
    pub fn with_truncation(mut self, level: usize) -> Result<Self> {
        let leftover = self.residual_mass(level);
        if !(leftover < TRUNCATION_TOLERANCE) {
            return Err(Error::domain(format!(
                "truncation at {level} sticks leaves expected mass {leftover:.3e} (need < {TRUNCATION_TOLERANCE:e})"
            )));
        }
        self.truncation = level;
        Ok(self)
    }

    /// `E[Π (1 − V_l)] = (a/(a+1))^L`.
    pub fn residual_mass(&self, level: usize) -> f64 {
        (self.a / (self.a + 1.0)).powf(level as f64)
    }

    fn check(a: f64, base: NormalBase) -> Result<()> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!("concentration must be positive (got {a})")));
        }
        if !(base.sd > 0.0 && base.sd.is_finite() && base.mean.is_finite()) {
            return Err(Error::domain("centre distribution needs finite mean and positive sd"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Self::check(self.a, self.base)?;
        self.clone().with_truncation(self.truncation).map(|_| ())
    }

    /// `G ~ Dir(a F₀)`: truncated sticks with `Beta(1, a)` breaks, the last
    /// atom taking what is left. Pushes `(location, scale · weight)`.
    fn push_centre_draw(&self, scale: f64, atoms: &mut Vec<(f64, f64)>, rng: &mut StreamRng) {
        let mut left = 1.0f64;
        for l in 0..self.truncation {
            let w = if l + 1 == self.truncation {
                left
            } else {
                let u: f64 = rng.random();
                // 1 − V with V ~ Beta(1, a)
                let keep = u.powf(1.0 / self.a);
                let w = left * (1.0 - keep);
                left *= keep;
                w
            };
            atoms.push((self.base.sample(rng), scale * w));
        }
    }

    pub fn sample_prior(&self, rng: &mut StreamRng) -> StepCdf {
        let mut atoms = Vec::with_capacity(self.truncation);
        self.push_centre_draw(1.0, &mut atoms, rng);
        StepCdf::from_atoms(&mut atoms)
    }

    /// A draw from `Dir(a F₀ + n F_n)`, built as `W₀ G + Σ W_i δ_{y_i}` with
    /// `(W₀, W₁, …, W_n) ~ Dirichlet(a, 1, …, 1)` and `G ~ Dir(a F₀)`.
    pub fn sample_posterior(&self, data: &[f64], rng: &mut StreamRng) -> Result<StepCdf> {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("observations must be finite".into()));
        }
        let mut atoms = Vec::with_capacity(self.truncation + data.len());
        let g0 = sample_gamma(self.a, 1.0, rng)?;
        let mut total = g0;
        for &y in data {
            let g = sample_gamma(1.0, 1.0, rng)?;
            total += g;
            atoms.push((y, g));
        }
        for atom in atoms.iter_mut() {
            atom.1 /= total;
        }
        self.push_centre_draw(g0 / total, &mut atoms, rng);
        Ok(StepCdf::from_atoms(&mut atoms))
    }
}

/// `n` i.i.d. draws from a realized discrete distribution.
pub fn sample_from<R: Rng + ?Sized>(f: &StepCdf, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            f.quantile(u.max(f64::MIN_POSITIVE))
        })
        .collect()
}

/// `√n sup_t |F_n(t) − F(t)|`, or the unscaled sup when `scaled` is false.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledKs {
    pub scaled: bool,
}

impl Default for ScaledKs {
    fn default() -> Self {
        ScaledKs { scaled: true }
    }
}

impl ScaledKs {
    fn scale(&self, n: usize, sup: f64) -> f64 {
        if self.scaled {
            (n as f64).sqrt() * sup
        } else {
            sup
        }
    }
}

impl Discrepancy<StepCdf, Vec<f64>> for ScaledKs {
    fn evaluate(&self, y: &Vec<f64>, f: &StepCdf) -> f64 {
        self.scale(y.len(), StepCdf::new(y).sup_distance(f))
    }
}

impl Discrepancy<GnParam, Vec<f64>> for ScaledKs {
    fn evaluate(&self, y: &Vec<f64>, theta: &GnParam) -> f64 {
        let (mu, sd) = (theta.beta[0], theta.lambda.sqrt().recip());
        self.scale(y.len(), ks_distance(&StepCdf::new(y), |t| normal_cdf((t - mu) / sd)))
    }
}

/// i.i.d. observations from `F ~ Dir(a F₀)`.
#[derive(Clone, Debug)]
pub struct DirichletModel {
    prior: DpPrior,
    n: usize,
}

impl DirichletModel {
    pub fn new(prior: DpPrior, n: usize) -> Result<Self> {
        prior.validate()?;
        if n == 0 {
            return Err(Error::Data("sample size must be positive".into()));
        }
        Ok(DirichletModel { prior, n })
    }

    pub fn prior(&self) -> &DpPrior {
        &self.prior
    }
}

impl GenerativeModel for DirichletModel {
    type Param = StepCdf;
    type Data = Vec<f64>;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<StepCdf> {
        Ok(self.prior.sample_prior(rng))
    }

    fn sample_posterior(&self, y: &Vec<f64>, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<StepCdf>> {
        let draws = (0..draws)
            .map(|_| self.prior.sample_posterior(y, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(PosteriorDraws::exact(draws))
    }

    fn sample_data(&self, f: &StepCdf, rng: &mut StreamRng) -> Vec<f64> {
        sample_from(f, self.n, rng)
    }

    fn parameter_dim(&self) -> usize {
        self.prior.truncation
    }

    fn data_len(&self) -> usize {
        self.n
    }
}

/// ppp of the scaled KS discrepancy under the Dirichlet-process prior.
pub fn ppp_np(y: &[f64], prior: &DpPrior, draws: usize, stream: RngStream) -> Result<PppEstimate> {
    let model = DirichletModel::new(prior.clone(), y.len())?;
    estimate_ppp(&model, &ScaledKs::default(), &y.to_vec(), &PppOptions::with_draws(draws), stream)
}

/// ppp of the scaled KS discrepancy under a normal model with GN prior.
pub fn ppp_parametric_ks(y: &[f64], prior: &GnPrior, draws: usize, stream: RngStream) -> Result<PppEstimate> {
    let model = NormalSampleModel::new(prior.clone(), y.len())?;
    estimate_ppp(&model, &ScaledKs::default(), &y.to_vec(), &PppOptions::with_draws(draws), stream)
}

/// Calibrated KS checks of the same data under both priors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NpComparison {
    pub dirichlet: CpppEstimate,
    pub normal: CpppEstimate,
}

/// Runs the Dirichlet-process calibration on substream 0 of `stream` and
/// the normal one on substream 1.
pub fn compare_np(
    y: &[f64],
    dp: &DpPrior,
    gn: &GnPrior,
    options: &CalibrationOptions,
    stream: RngStream,
) -> Result<NpComparison> {
    let data = y.to_vec();
    let disc = ScaledKs::default();
    let dirichlet = calibrate_cppp(&DirichletModel::new(dp.clone(), y.len())?, &disc, &data, options, stream.substream(0))?;
    let normal = calibrate_cppp(&NormalSampleModel::new(gn.clone(), y.len())?, &disc, &data, options, stream.substream(1))?;
    Ok(NpComparison { dirichlet, normal })
}
