//! Generic estimation of posterior predictive p-values and their
//! calibration against a reference distribution.

pub mod diagnostics;
mod estimate;
mod model;

pub use diagnostics::{effective_sample_size, wilson_interval};
pub use estimate::{
    calibrate_against, calibrate_cppp, calibrated_value, estimate_ppp, estimate_prpp,
    null_ppp_sample, par_map_indexed, Calibration, CalibrationOptions, CpppEstimate, PppEstimate,
    PppOptions, DEFAULT_INNER_DRAWS, DEFAULT_OUTER_REPLICATES,
};
pub use model::{
    ChainDiagnostics, DataSampler, Discrepancy, GenerativeModel, PosteriorDraws,
    PosteriorPredictive, PriorPredictive,
};
