use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{gn_update, GnPrior, GnRegressionModel, RegressionData};
use crate::engine::{calibrated_value, estimate_ppp, PppEstimate, PppOptions};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_cholesky};
use crate::stats::quad::GaussLegendre;
use crate::stats::{
    chi_square_sf, noncentral_f_cdf, sample_chisq, sample_gamma, sample_std_normal, RngStream,
    StreamRng,
};

pub const DEFAULT_GAMMA_DRAWS: usize = 100_000;

/// How to integrate over the posterior of λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralMethod {
    /// Average over this many posterior gamma draws.
    GammaDraws(usize),
    /// Gauss–Legendre quadrature against the gamma density.
    Quadrature,
}

impl Default for IntegralMethod {
    fn default() -> Self {
        IntegralMethod::GammaDraws(DEFAULT_GAMMA_DRAWS)
    }
}

fn check_proportional(prior: &GnPrior, data: &RegressionData) -> Result<()> {
    if data.p() != prior.dim() {
        return Err(Error::Data(format!(
            "prior has dimension {} but design has {} columns",
            prior.dim(),
            data.p()
        )));
    }
    let target = data.omega_n() / data.n() as f64;
    let gap = (&prior.omega0 - &target).amax();
    if gap > 1e-8 * target.amax() {
        return Err(Error::domain(
            "closed form needs omega0 = XᵀX / n (the proportional prior)",
        ));
    }
    Ok(())
}

/// `E[g(λ)]` for `λ ~ Gamma(shape, rate)`.
fn gamma_expectation<G: Fn(f64) -> Result<f64>>(
    shape: f64,
    rate: f64,
    g: G,
    method: IntegralMethod,
    stream: RngStream,
) -> Result<f64> {
    match method {
        IntegralMethod::GammaDraws(0) => Err(Error::domain("gamma draws must be positive")),
        IntegralMethod::GammaDraws(draws) => {
            let mut rng = stream.rng();
            let mut total = 0.0;
            for _ in 0..draws {
                total += g(sample_gamma(shape, rate, &mut rng)?)?;
            }
            Ok(total / draws as f64)
        }
        IntegralMethod::Quadrature => {
            let mean = shape / rate;
            let sd = shape.sqrt() / rate;
            let lo = (mean - 12.0 * sd).max(0.0);
            let hi = mean + 40.0 * sd;
            let ln_norm = shape * rate.ln() - ln_gamma(shape);
            let density = |l: f64| {
                if l <= 0.0 {
                    0.0
                } else {
                    (ln_norm + (shape - 1.0) * l.ln() - rate * l).exp()
                }
            };
            let mut failure = None;
            let value = GaussLegendre::new(20).composite(
                |l| {
                    let d = density(l);
                    if d == 0.0 {
                        return 0.0;
                    }
                    match g(l) {
                        Ok(v) => d * v,
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                200,
            );
            match failure {
                Some(e) => Err(e),
                None => Ok(value),
            }
        }
    }
}

/// ppp of `λ(β̂ − β)ᵀΩ_n(β̂ − β)` under the proportional prior `Ω₀ = Ω_n/n`:
/// `∫ F_{p,p}(1 + c₀/n, λ c₀² κ_n/(c₀+n)) g_n(λ) dλ` with `g_n` the
/// posterior density of λ.
pub fn ppp_proportional(
    prior: &GnPrior,
    data: &RegressionData,
    method: IntegralMethod,
    stream: RngStream,
) -> Result<f64> {
    check_proportional(prior, data)?;
    let post = gn_update(prior, data)?;
    let (c0, n, p) = (prior.c0, data.n() as f64, data.p() as u32);
    let scale = c0 * c0 * data.kappa_n(&prior.beta0) / (c0 + n);
    let v = 1.0 + c0 / n;
    let value = gamma_expectation(
        0.5 * post.a_n,
        0.5 * post.b_n,
        |lambda| noncentral_f_cdf(v, lambda * scale, p),
        method,
        stream,
    )?;
    Ok(value.clamp(0.0, 1.0))
}

/// Scalar location model: ppp of `(ȳ − μ)²`.
pub fn ppp_gn_scalar(prior: &GnPrior, y: &[f64], method: IntegralMethod, stream: RngStream) -> Result<f64> {
    if prior.dim() != 1 {
        return Err(Error::domain("scalar ppp needs a one-dimensional prior"));
    }
    ppp_proportional(prior, &RegressionData::location(y)?, method, stream)
}

/// Known-σ regression ppp, averaging `Pr{χ²_p ≥ (U+f)ᵀΩ_n(U+f)}` over
/// `U ~ N_p(0, (c₀Ω₀+Ω_n)⁻¹)` with `f = (c₀Ω₀+Ω_n)⁻¹c₀Ω₀(β̂−β₀)/σ`.
/// Only `beta0`, `c0` and `omega0` of the prior are used.
pub fn ppp_regression_known_sigma(
    prior: &GnPrior,
    data: &RegressionData,
    sigma: f64,
    draws: usize,
    stream: RngStream,
) -> Result<PppEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if draws == 0 {
        return Err(Error::domain("draws must be positive"));
    }
    if data.p() != prior.dim() {
        return Err(Error::Data("prior and design dimensions differ".into()));
    }
    let prior_prec = prior.precision();
    let precision = &prior_prec + data.omega_n();
    let chol = spd_cholesky(&precision, "c₀Ω₀ + Ω_n")?;
    let f = chol.solve(&(&prior_prec * (data.beta_hat() - &prior.beta0))) / sigma;
    let lt = chol.l().transpose();
    let p = data.p();
    let mut rng = stream.rng();
    let terms: Vec<f64> = (0..draws)
        .map(|_| {
            let z = nalgebra::DVector::from_fn(p, |_, _| sample_std_normal(&mut rng));
            let u = lt.solve_upper_triangular(&z).expect("positive diagonal");
            chi_square_sf(p as f64, quad_form(data.omega_n(), &(u + &f)))
        })
        .collect();
    Ok(mean_estimate(&terms, stream))
}

fn mean_estimate(terms: &[f64], stream: RngStream) -> PppEstimate {
    let a = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / a;
    let var = if terms.len() > 1 {
        terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (a - 1.0)
    } else {
        0.0
    };
    PppEstimate {
        value,
        mc_se: (var / a).sqrt(),
        replicates: terms.len(),
        stream,
        tie_count: 0,
        rao_blackwellized: true,
        diagnostics: None,
    }
}

/// Known-σ ppp under the proportional prior:
/// `F_{p,p}(1 + c₀/n, c₀² κ_n / ((c₀+n) σ²))`.
pub fn ppp_regression_known_sigma_proportional(
    prior: &GnPrior,
    data: &RegressionData,
    sigma: f64,
) -> Result<f64> {
    check_proportional(prior, data)?;
    let (c0, n) = (prior.c0, data.n() as f64);
    let kappa = c0 * c0 * data.kappa_n(&prior.beta0) / ((c0 + n) * sigma * sigma);
    noncentral_f_cdf(1.0 + c0 / n, kappa, data.p() as u32)
}

/// Rao-Blackwellized ppp for the full GN regression model, averaging
/// `Pr{χ²_p ≥ λ_j(β̂ − β_j)ᵀΩ_n(β̂ − β_j)}` over `A` posterior draws.
pub fn ppp_regression_gn(
    prior: &GnPrior,
    data: &RegressionData,
    draws: usize,
    stream: RngStream,
) -> Result<PppEstimate> {
    let model = GnRegressionModel::new(prior.clone(), data.x().clone())?;
    estimate_ppp(
        &model,
        &model.discrepancy()?,
        data.y(),
        &PppOptions::with_draws(draws),
        stream,
    )
}

/// `m` draws of ppp(Y) under the prior predictive of the proportional
/// model: `F_{p,p}(1 + c₀/n, (c₀/n) Z)` with `Z ~ χ²_p`. σ does not enter.
pub fn null_ppp_regression_proportional(
    p: usize,
    c0: f64,
    n: usize,
    m: usize,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if p == 0 || n == 0 || !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::domain("need p, n ≥ 1 and c0 > 0"));
    }
    let ratio = c0 / n as f64;
    (0..m)
        .map(|_| noncentral_f_cdf(1.0 + ratio, ratio * sample_chisq(p as f64, rng)?, p as u32))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionalCalibration {
    pub ppp: f64,
    pub cppp: f64,
    pub ci_95: (f64, f64),
    pub null_ppp: Vec<f64>,
}

/// cppp for the proportional GN model using the closed-form null law.
/// Substream 0 drives the observed ppp, substream 1 the null sample.
pub fn cppp_regression_proportional(
    prior: &GnPrior,
    data: &RegressionData,
    m: usize,
    method: IntegralMethod,
    stream: RngStream,
) -> Result<ProportionalCalibration> {
    if m == 0 {
        return Err(Error::domain("null sample size must be positive"));
    }
    let ppp = ppp_proportional(prior, data, method, stream.substream(0))?;
    let null_ppp = null_ppp_regression_proportional(
        data.p(),
        prior.c0,
        data.n(),
        m,
        &mut stream.substream(1).rng(),
    )?;
    let (cppp, ci_95) = calibrated_value(ppp, &null_ppp);
    Ok(ProportionalCalibration {
        ppp,
        cppp,
        ci_95,
        null_ppp,
    })
}

/// Known-σ cppp under the proportional prior:
/// `Pr{χ²_p ≥ c₀/(c₀+n) (β̂−β₀)ᵀΩ_n(β̂−β₀)/σ²}`.
pub fn cppp_regression_known_sigma_closed(
    prior: &GnPrior,
    data: &RegressionData,
    sigma: f64,
) -> Result<f64> {
    check_proportional(prior, data)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let (c0, n) = (prior.c0, data.n() as f64);
    let q = quad_form(data.omega_n(), &(data.beta_hat() - &prior.beta0));
    Ok(chi_square_sf(data.p() as f64, c0 / (c0 + n) * q / (sigma * sigma)))
}

