//! Effective sample size and binomial intervals.

/// Effective sample size of a chain by Geyer's initial monotone sequence
/// estimator of the integrated autocorrelation time.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = chain.iter().map(|x| x - mean).collect();
    let var = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return n as f64;
    }
    let autocorr = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = autocorr(lag) + autocorr(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    (n as f64 / tau.max(1e-12)).min(n as f64 * 10.0)
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{sample_std_normal, RngStream};

    #[test]
    fn iid_chain_has_full_ess() {
        let mut rng = RngStream::new(1).rng();
        let xs: Vec<f64> = (0..20_000).map(|_| sample_std_normal(&mut rng)).collect();
        let ess = effective_sample_size(&xs);
        assert!((ess / 20_000.0 - 1.0).abs() < 0.15, "{ess}");
    }

    #[test]
    fn ar1_chain_ess_matches_theory() {
        // AR(1) with φ: ESS/n = (1 − φ)/(1 + φ)
        let phi = 0.8;
        let mut rng = RngStream::new(2).rng();
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = phi * x + (1.0f64 - phi * phi).sqrt() * sample_std_normal(&mut rng);
                x
            })
            .collect();
        let ratio = effective_sample_size(&xs) / xs.len() as f64;
        assert!((ratio - (1.0 - phi) / (1.0 + phi)).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(11, 500);
        assert!(lo < 0.022 && 0.022 < hi);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }
}
