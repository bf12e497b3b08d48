use super::{
    expected_counts, freeman_tukey_discrepancy, sample_posterior_mh, sample_recaptures, ChainConfig, RecaptureData,
    Variant,
};
use crate::engine::{
    calibrate_cppp, estimate_ppp, CalibrationOptions, CpppEstimate, Discrepancy, GenerativeModel, PosteriorDraws,
    PppEstimate, PppOptions,
};
use crate::error::Result;
use crate::stats::{RngStream, StreamRng};

/// Recapture model with uniform priors and release numbers held fixed.
/// Parameters are the free survival/capture probabilities of the variant.
#[derive(Clone, Debug)]
pub struct DipperModel {
    pub releases: Vec<u64>,
    pub first_year: i32,
    pub variant: Variant,
    pub chain: ChainConfig,
}

impl DipperModel {
    pub fn new(data: &RecaptureData, variant: Variant, chain: ChainConfig) -> Self {
        DipperModel {
            releases: data.releases.clone(),
            first_year: data.first_year,
            variant,
            chain,
        }
    }

    fn cohorts(&self) -> usize {
        self.releases.len()
    }

    pub fn discrepancy(&self) -> FreemanTukey {
        FreemanTukey {
            releases: self.releases.clone(),
            variant: self.variant,
        }
    }
}

impl GenerativeModel for DipperModel {
    type Param = Vec<f64>;
    type Data = RecaptureData;

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        use rand::Rng;
        Ok((0..self.variant.free_parameters(self.cohorts()))
            .map(|_| rng.random::<f64>())
            .collect())
    }

    fn sample_posterior(&self, y: &RecaptureData, draws: usize, rng: &mut StreamRng) -> Result<PosteriorDraws<Vec<f64>>> {
        let out = sample_posterior_mh(y, self.variant, draws, &self.chain, rng)?;
        Ok(PosteriorDraws {
            draws: out.draws,
            diagnostics: Some(out.diagnostics),
        })
    }

    fn sample_data(&self, theta: &Vec<f64>, rng: &mut StreamRng) -> RecaptureData {
        let params = self.variant.expand(theta, self.cohorts());
        RecaptureData {
            first_year: self.first_year,
            releases: self.releases.clone(),
            recaptures: sample_recaptures(&params, &self.releases, rng),
        }
    }

    fn parameter_dim(&self) -> usize {
        self.variant.free_parameters(self.cohorts())
    }

    fn data_len(&self) -> usize {
        self.cohorts() * (self.cohorts() + 1) / 2
    }
}

/// Freeman–Tukey distance between observed and expected recaptures.
#[derive(Clone, Debug)]
pub struct FreemanTukey {
    releases: Vec<u64>,
    variant: Variant,
}

impl Discrepancy<Vec<f64>, RecaptureData> for FreemanTukey {
    fn evaluate(&self, y: &RecaptureData, theta: &Vec<f64>) -> f64 {
        let params = self.variant.expand(theta, self.releases.len());
        freeman_tukey_discrepancy(&y.recaptures, &expected_counts(&params, &self.releases))
    }
}

pub fn ppp_dipper(
    data: &RecaptureData,
    variant: Variant,
    draws: usize,
    chain: ChainConfig,
    stream: RngStream,
) -> Result<PppEstimate> {
    let model = DipperModel::new(data, variant, chain);
    estimate_ppp(&model, &model.discrepancy(), data, &PppOptions::with_draws(draws), stream)
}

pub fn cppp_dipper(
    data: &RecaptureData,
    variant: Variant,
    options: &CalibrationOptions,
    chain: ChainConfig,
    stream: RngStream,
) -> Result<CpppEstimate> {
    let model = DipperModel::new(data, variant, chain);
    calibrate_cppp(&model, &model.discrepancy(), data, options, stream)
}
