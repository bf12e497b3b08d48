//! Random streams, special functions and distribution primitives.

pub mod ecdf;
pub mod quad;
pub mod rng;
pub mod sampling;
pub mod special;

pub use ecdf::{ks_distance, EmpiricalCdf, StepCdf};
pub use rng::{RngStream, StreamRng};
pub use sampling::{
    cholesky_factor, sample_chisq, sample_gamma, sample_multinomial, sample_mvnormal,
    sample_noncentral_chisq, sample_std_normal,
};
pub use special::{
    chi_square_cdf, chi_square_sf, noncentral_f_cdf, noncentral_f_excentre_inverse, normal_cdf,
    normal_ln_pdf, normal_quantile, normal_sf, NoncentralFParams,
};
