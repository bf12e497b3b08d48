use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log_likelihood, RecaptureData, Variant};
use crate::engine::{effective_sample_size, ChainDiagnostics};
use crate::error::{Error, Result};
use crate::stats::{sample_std_normal, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub thin: usize,
    /// Starting proposal sd on the logit scale.
    pub initial_sd: f64,
    /// Burn-in sweeps between proposal-scale adjustments.
    pub adapt_batch: usize,
    pub target_acceptance: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 2000,
            thin: 5,
            initial_sd: 0.5,
            adapt_batch: 50,
            target_acceptance: 0.35,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    /// Free parameters on the probability scale: survival first, then capture.
    pub draws: Vec<Vec<f64>>,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
    pub proposal_sd: Vec<f64>,
    pub diagnostics: ChainDiagnostics,
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log posterior on the logit scale under independent uniform priors: the
/// log-likelihood plus the log-Jacobian `Σ log θ(1 − θ)`.
fn log_target(x: &[f64], variant: Variant, data: &RecaptureData) -> f64 {
    let theta: Vec<f64> = x.iter().map(|&v| expit(v)).collect();
    let params = variant.expand(&theta, data.cohorts());
    let ll = log_likelihood(&params, data).unwrap_or(f64::NEG_INFINITY);
    let jacobian: f64 = x.iter().map(|&v| -softplus(-v) - softplus(v)).sum();
    ll + jacobian
}

/// One-at-a-time random-walk Metropolis on the logit scale. Proposal sds
/// adapt during burn-in towards `target_acceptance` and are then frozen.
pub fn sample_posterior_mh(
    data: &RecaptureData,
    variant: Variant,
    draws: usize,
    config: &ChainConfig,
    rng: &mut StreamRng,
) -> Result<ChainOutput> {
    if draws == 0 || config.thin == 0 || config.adapt_batch == 0 {
        return Err(Error::domain("draws, thin and adapt_batch must be positive"));
    }
    if !(config.initial_sd > 0.0) {
        return Err(Error::domain("initial proposal sd must be positive"));
    }
    let dim = variant.free_parameters(data.cohorts());
    let mut x = vec![logit(0.6); dim];
    let mut current = log_target(&x, variant, data);
    if !current.is_finite() {
        return Err(Error::estimation("starting point has zero posterior density", None));
    }
    let mut sd = vec![config.initial_sd; dim];
    let mut batch_accepts = vec![0usize; dim];
    let mut accepts = vec![0usize; dim];

    let sweep = |x: &mut Vec<f64>, current: &mut f64, sd: &[f64], rng: &mut StreamRng, tally: &mut [usize]| {
        for j in 0..dim {
            let old = x[j];
            x[j] = old + sd[j] * sample_std_normal(rng);
            let proposed = log_target(x, variant, data);
            let log_u: f64 = rng.random::<f64>().ln();
            if proposed.is_finite() && log_u < proposed - *current {
                *current = proposed;
                tally[j] += 1;
            } else {
                x[j] = old;
            }
        }
    };

    for s in 0..config.burn_in {
        sweep(&mut x, &mut current, &sd, rng, &mut batch_accepts);
        if (s + 1) % config.adapt_batch == 0 {
            let step = 1.0 / (((s + 1) / config.adapt_batch) as f64).sqrt().max(1.0);
            for j in 0..dim {
                let rate = batch_accepts[j] as f64 / config.adapt_batch as f64;
                sd[j] *= (step * (rate - config.target_acceptance) * 4.0).exp();
                sd[j] = sd[j].clamp(1e-3, 20.0);
                batch_accepts[j] = 0;
            }
        }
    }

    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        for _ in 0..config.thin {
            sweep(&mut x, &mut current, &sd, rng, &mut accepts);
        }
        out.push(x.iter().map(|&v| expit(v)).collect::<Vec<f64>>());
    }

    let iterations = draws * config.thin;
    let acceptance_rate = accepts.iter().sum::<usize>() as f64 / (iterations * dim) as f64;
    let columns: Vec<Vec<f64>> = (0..dim).map(|j| out.iter().map(|d| d[j]).collect()).collect();
    let posterior_mean: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / draws as f64).collect();
    let posterior_sd: Vec<f64> = columns
        .iter()
        .zip(&posterior_mean)
        .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (draws.max(2) - 1) as f64).sqrt())
        .collect();
    let effective_sample_size: Vec<f64> = columns.iter().map(|c| effective_sample_size(c)).collect();

    let mut warnings = Vec::new();
    for (j, &a) in accepts.iter().enumerate() {
        let rate = a as f64 / iterations as f64;
        if !(0.1..=0.6).contains(&rate) {
            warnings.push(format!("parameter {j}: acceptance rate {rate:.3} outside [0.1, 0.6]"));
        }
    }
    // a flat posterior on [0, 1] has sd 1/√12 ≈ 0.289
    for (j, &s) in posterior_sd.iter().enumerate() {
        if s > 0.2 {
            warnings.push(format!("parameter {j}: posterior sd {s:.3} is close to the prior's; weakly identified"));
        }
    }
    if variant == Variant::Tt {
        let k = data.cohorts();
        let r = correlation(&columns[k - 1], &columns[2 * k - 1]);
        if r < -0.5 {
            warnings.push(format!(
                "last survival and last capture probability are confounded (posterior correlation {r:.2})"
            ));
        }
    }

    Ok(ChainOutput {
        draws: out,
        posterior_mean,
        posterior_sd,
        proposal_sd: sd,
        diagnostics: ChainDiagnostics {
            iterations: config.burn_in + iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            acceptance_rate,
            effective_sample_size,
            warnings,
        },
    })
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
