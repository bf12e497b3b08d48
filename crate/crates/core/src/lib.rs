//! Posterior predictive p-values (ppp) and their calibrated versions (cppp).
//!
//! The crate pairs closed-form routes for conjugate Gaussian models with a
//! generic double-simulation engine that works for any model able to sample
//! its prior, its posterior and its data.

pub mod capture_recapture;
pub mod conjugate_gn;
pub mod elicitation;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod nonparametric;
pub mod normal_normal;
pub mod registry;
pub mod stats;

pub use error::{Error, Result};
