use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{effective_sample_size, wilson_interval};
use super::model::{ChainDiagnostics, DataSampler, Discrepancy, GenerativeModel, PriorPredictive};
use crate::error::{Error, Result};
use crate::stats::RngStream;

pub const DEFAULT_INNER_DRAWS: usize = 2000;
pub const DEFAULT_OUTER_REPLICATES: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PppOptions {
    /// Posterior draws `A`.
    pub draws: usize,
    /// Average closed-form tail probabilities instead of simulating
    /// replicates when the discrepancy provides them.
    pub rao_blackwellize: bool,
}

impl Default for PppOptions {
    fn default() -> Self {
        PppOptions {
            draws: DEFAULT_INNER_DRAWS,
            rao_blackwellize: true,
        }
    }
}

impl PppOptions {
    pub fn with_draws(draws: usize) -> Self {
        PppOptions {
            draws,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub inner: PppOptions,
    /// Null replicates `B`.
    pub outer_replicates: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            inner: PppOptions::default(),
            outer_replicates: DEFAULT_OUTER_REPLICATES,
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PppEstimate {
    pub value: f64,
    pub mc_se: f64,
    pub replicates: usize,
    pub stream: RngStream,
    /// Replicates whose discrepancy exactly equalled the observed one; they
    /// are counted as exceedances.
    pub tie_count: usize,
    pub rao_blackwellized: bool,
    pub diagnostics: Option<ChainDiagnostics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpppEstimate {
    pub value: f64,
    pub ci_95: (f64, f64),
    pub outer_replicates: usize,
    pub inner_draws: usize,
    pub ppp_obs: PppEstimate,
    /// ppp of each null replicate, in replicate order.
    pub null_ppp: Vec<f64>,
    pub stream: RngStream,
}

/// Reference distribution of ppp under some data-generating mechanism, and
/// the calibrated value of one ppp against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub ppp: f64,
    pub value: f64,
    pub ci_95: (f64, f64),
    pub null_ppp: Vec<f64>,
    pub stream: RngStream,
}

/// Posterior predictive p-value `Pr{D(y_rep, θ) ≥ D(y_obs, θ) | y_obs}`.
pub fn estimate_ppp<M, D>(
    model: &M,
    discrepancy: &D,
    y_obs: &M::Data,
    options: &PppOptions,
    stream: RngStream,
) -> Result<PppEstimate>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data> + ?Sized,
{
    if options.draws == 0 {
        return Err(Error::domain("posterior draws must be positive"));
    }
    let mut rng = stream.rng();
    let posterior = model.sample_posterior(y_obs, options.draws, &mut rng)?;
    if posterior.draws.is_empty() {
        return Err(Error::estimation("posterior sampler returned no draws", None));
    }

    let mut terms = Vec::with_capacity(posterior.draws.len());
    let mut ties = 0;
    let mut rao_blackwellized = options.rao_blackwellize;
    for (i, theta) in posterior.draws.iter().enumerate() {
        let d_obs = discrepancy.evaluate(y_obs, theta);
        if d_obs.is_nan() {
            return Err(Error::estimation("observed discrepancy is NaN", None));
        }
        if rao_blackwellized {
            match discrepancy.reference_tail(theta, d_obs) {
                Some(tail) => {
                    terms.push(tail);
                    continue;
                }
                None if i == 0 => rao_blackwellized = false,
                None => {
                    return Err(Error::estimation(
                        "discrepancy stopped providing reference tails part way",
                        None,
                    ))
                }
            }
        }
        let y_rep = model.sample_data(theta, &mut rng);
        let d_rep = discrepancy.evaluate(&y_rep, theta);
        if d_rep.is_nan() {
            return Err(Error::estimation("replicate discrepancy is NaN", None));
        }
        if d_rep == d_obs {
            ties += 1;
        }
        terms.push(if d_rep >= d_obs { 1.0 } else { 0.0 });
    }

    let a = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / a;
    let var = if terms.len() > 1 {
        terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (a - 1.0)
    } else {
        0.0
    };
    let effective = if posterior.diagnostics.is_some() {
        effective_sample_size(&terms).clamp(1.0, a)
    } else {
        a
    };
    Ok(PppEstimate {
        value,
        mc_se: (var / effective).sqrt(),
        replicates: terms.len(),
        stream,
        tie_count: ties,
        rao_blackwellized,
        diagnostics: posterior.diagnostics,
    })
}

/// Calibrated posterior predictive p-value: the proportion of prior-predictive
/// replicate data sets whose ppp is no larger than the observed ppp.
///
/// Replicate `k` draws from its own substream and results are reduced in
/// index order, so the outcome does not depend on `workers`.
pub fn calibrate_cppp<M, D>(
    model: &M,
    discrepancy: &D,
    y_obs: &M::Data,
    options: &CalibrationOptions,
    stream: RngStream,
) -> Result<CpppEstimate>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data> + ?Sized,
{
    if !model.prior_is_samplable() {
        return Err(Error::ImproperPrior(
            "calibration needs draws from the prior predictive".into(),
        ));
    }
    let ppp_obs = estimate_ppp(model, discrepancy, y_obs, &options.inner, stream.substream(0))?;
    let null_ppp = null_ppp_sample(model, discrepancy, &PriorPredictive(model), options, stream)?;
    let (value, ci_95) = calibrated_value(ppp_obs.value, &null_ppp);
    Ok(CpppEstimate {
        value,
        ci_95,
        outer_replicates: null_ppp.len(),
        inner_draws: options.inner.draws,
        ppp_obs,
        null_ppp,
        stream,
    })
}

/// Calibrates an already computed ppp against data generated by `sampler`
/// instead of the prior predictive.
pub fn calibrate_against<M, D, S>(
    ppp: f64,
    model: &M,
    discrepancy: &D,
    sampler: &S,
    options: &CalibrationOptions,
    stream: RngStream,
) -> Result<Calibration>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data> + ?Sized,
    S: DataSampler<M::Data> + ?Sized,
{
    let null_ppp = null_ppp_sample(model, discrepancy, sampler, options, stream)?;
    let (value, ci_95) = calibrated_value(ppp, &null_ppp);
    Ok(Calibration {
        ppp,
        value,
        ci_95,
        null_ppp,
        stream,
    })
}

/// ppp values of `B` data sets drawn from `sampler`. Replicate `k` uses
/// substream `k + 1` of `stream`.
pub fn null_ppp_sample<M, D, S>(
    model: &M,
    discrepancy: &D,
    sampler: &S,
    options: &CalibrationOptions,
    stream: RngStream,
) -> Result<Vec<f64>>
where
    M: GenerativeModel,
    D: Discrepancy<M::Param, M::Data> + ?Sized,
    S: DataSampler<M::Data> + ?Sized,
{
    if options.outer_replicates == 0 {
        return Err(Error::domain("outer replicates must be positive"));
    }
    par_map_indexed(options.workers, options.outer_replicates, |k| {
        let replicate = stream.substream(k as u64 + 1);
        let y = sampler.sample(&mut replicate.substream(0).rng())?;
        estimate_ppp(model, discrepancy, &y, &options.inner, replicate.substream(1)).map(|e| e.value)
    })
}

/// Prior predictive p-value `Pr{T(y_rep) ≥ T(y_obs)}` with `y_rep` drawn
/// from the prior predictive.
pub fn estimate_prpp<M, T>(
    model: &M,
    statistic: T,
    y_obs: &M::Data,
    draws: usize,
    stream: RngStream,
) -> Result<PppEstimate>
where
    M: GenerativeModel,
    T: Fn(&M::Data) -> f64,
{
    if !model.prior_is_samplable() {
        return Err(Error::ImproperPrior(
            "prior predictive p-value needs a proper prior".into(),
        ));
    }
    if draws == 0 {
        return Err(Error::domain("draws must be positive"));
    }
    let t_obs = statistic(y_obs);
    let mut rng = stream.rng();
    let mut hits = 0usize;
    let mut ties = 0usize;
    for _ in 0..draws {
        let theta = model.sample_prior(&mut rng)?;
        let t = statistic(&model.sample_data(&theta, &mut rng));
        if t == t_obs {
            ties += 1;
        }
        if t >= t_obs {
            hits += 1;
        }
    }
    let value = hits as f64 / draws as f64;
    Ok(PppEstimate {
        value,
        mc_se: (value * (1.0 - value) / draws as f64).sqrt(),
        replicates: draws,
        stream,
        tie_count: ties,
        rao_blackwellized: false,
        diagnostics: None,
    })
}

/// `(1/B) #{null_k ≤ ppp}` with a 95% Wilson interval.
pub fn calibrated_value(ppp: f64, null_ppp: &[f64]) -> (f64, (f64, f64)) {
    let hits = null_ppp.iter().filter(|&&u| u <= ppp).count();
    (
        hits as f64 / null_ppp.len().max(1) as f64,
        wilson_interval(hits, null_ppp.len()),
    )
}

/// Maps `f` over `0..n` on `workers` threads, keeping index order.
pub fn par_map_indexed<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::estimation(format!("cannot start worker pool: {e}"), None))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}
