//! Turning prior guesses about outcome–covariate correlations into a
//! conjugate GN prior for a regression on centred covariates.
//!
//! With `v = D_n^{1/2} ρ` and covariate covariance `S_n`, a coefficient
//! vector `b` and error sd σ imply `v = S_n b / κ`, `κ² = bᵀS_n b + σ²`.
//! The prior `b | σ ~ N(S_n^{-1/2} z₀, σ²τ² S_n⁻¹)` induces a prior on ρ;
//! `z₀` is chosen so that its mean matches the guess `ρ₀`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conjugate_gn::GnPrior;
use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_cholesky, spd_inverse, spd_power};
use crate::stats::{sample_gamma, sample_std_normal, RngStream};

pub const DEFAULT_MC_SIZE: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBelief {
    pub rho0: DVector<f64>,
    /// Prior guess for the error sd.
    pub sigma0: f64,
    /// Spread of the induced correlation prior; `c₀ = 1/τ²`.
    pub tau: f64,
    /// Covariate covariance matrix.
    pub sn: DMatrix<f64>,
}

impl CorrelationBelief {
    pub fn new(rho0: DVector<f64>, sigma0: f64, tau: f64, sn: DMatrix<f64>) -> Result<Self> {
        let belief = CorrelationBelief {
            rho0,
            sigma0,
            tau,
            sn,
        };
        belief.validate()?;
        Ok(belief)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.rho0.len();
        if p == 0 || self.sn.shape() != (p, p) {
            return Err(Error::domain("Sn must be p×p with p = len(rho0) ≥ 1"));
        }
        if self.rho0.iter().any(|r| !(r.abs() < 1.0)) {
            return Err(Error::domain("every prior correlation must lie strictly inside (−1, 1)"));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::domain("sigma0 must be positive"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::domain("tau must be non-negative"));
        }
        spd_cholesky(&self.sn, "Sn")?;
        let q = quad_form(&spd_inverse(&self.sn, "Sn")?, &self.v0());
        if q >= 1.0 {
            return Err(Error::domain(format!(
                "correlations are jointly infeasible: v₀ᵀSn⁻¹v₀ = {q:.4} ≥ 1"
            )));
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.rho0.len()
    }

    /// `D_n^{1/2}`: covariate standard deviations.
    pub fn sd(&self) -> DVector<f64> {
        self.sn.diagonal().map(f64::sqrt)
    }

    /// `v₀ = D_n^{1/2} ρ₀`.
    pub fn v0(&self) -> DVector<f64> {
        self.sd().component_mul(&self.rho0)
    }

    /// `S_n^{-1/2} v₀`, the value the mean of `S_n^{-1/2} v` must hit.
    pub fn target(&self) -> Result<DVector<f64>> {
        Ok(spd_power(&self.sn, -0.5, "Sn")? * self.v0())
    }

    pub fn c0(&self) -> Result<f64> {
        if self.tau == 0.0 {
            return Err(Error::domain("tau = 0 gives an infinitely sharp prior"));
        }
        Ok(1.0 / (self.tau * self.tau))
    }
}

/// `u / (1 + ‖u‖²)^{1/2}` and its Jacobian.
fn squash(u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let s = (1.0 + u.norm_squared()).sqrt();
    let h = u / s;
    let p = u.len();
    let jac = (DMatrix::identity(p, p) - &h * h.transpose()) / s;
    (h, jac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Normal draws used for the expectation, fixed across iterations.
    pub mc_size: usize,
    /// Accept when the squared residual norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mc_size: DEFAULT_MC_SIZE,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z0Solution {
    pub z0: DVector<f64>,
    /// `S_n^{-1/2} z₀`.
    pub b_bar: DVector<f64>,
    /// Squared residual norm at the solution.
    pub objective: f64,
    pub iterations: usize,
}

/// The τ = 0 solution: `z₀/σ₀ = w/(1 − ‖w‖²)^{1/2}` with `w = S_n^{-1/2} v₀`.
pub fn z0_sharp(belief: &CorrelationBelief) -> Result<DVector<f64>> {
    belief.validate()?;
    let w = belief.target()?;
    Ok(&w * (belief.sigma0 / (1.0 - w.norm_squared()).sqrt()))
}

/// Solves `E[h(z₀/σ₀ + τN)] = S_n^{-1/2} v₀` for `z₀`, with `h` the map
/// `u ↦ u/(1 + ‖u‖²)^{1/2}` and the expectation over `mc_size` fixed normal
/// draws, by Levenberg–Marquardt.
pub fn solve_z0(belief: &CorrelationBelief, options: &SolverOptions, stream: RngStream) -> Result<Z0Solution> {
    belief.validate()?;
    let p = belief.p();
    let target = belief.target()?;
    let inv_half = spd_power(&belief.sn, -0.5, "Sn")?;
    let finish = |x: DVector<f64>, objective: f64, iterations: usize| {
        let z0 = x * belief.sigma0;
        Z0Solution {
            b_bar: &inv_half * &z0,
            z0,
            objective,
            iterations,
        }
    };
    let start = z0_sharp(belief)? / belief.sigma0;
    if belief.tau == 0.0 {
        return Ok(finish(start, 0.0, 0));
    }
    if options.mc_size == 0 {
        return Err(Error::domain("mc_size must be positive"));
    }

    let mut rng = stream.rng();
    let noise: Vec<DVector<f64>> = (0..options.mc_size)
        .map(|_| DVector::from_fn(p, |_, _| belief.tau * sample_std_normal(&mut rng)))
        .collect();
    let evaluate = |x: &DVector<f64>| {
        let mut g = DVector::zeros(p);
        let mut jac = DMatrix::zeros(p, p);
        for e in &noise {
            let (h, j) = squash(&(x + e));
            g += h;
            jac += j;
        }
        let m = noise.len() as f64;
        (g / m - &target, jac / m)
    };

    let mut x = start;
    let (mut r, mut jac) = evaluate(&x);
    let mut obj = r.norm_squared();
    let mut mu = 1e-3;
    let mut iterations = 0;
    while obj > options.tolerance * 1e-12 && iterations < options.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let damped = &jtj + DMatrix::from_diagonal(&jtj.diagonal()) * mu;
        let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
            mu *= 10.0;
            continue;
        };
        let candidate = &x + &step;
        let (r_new, jac_new) = evaluate(&candidate);
        let obj_new = r_new.norm_squared();
        if obj_new < obj {
            x = candidate;
            r = r_new;
            jac = jac_new;
            let improvement = obj - obj_new;
            obj = obj_new;
            mu = (mu / 10.0).max(1e-12);
            if improvement <= 1e-15 * obj.max(1e-300) && obj < options.tolerance {
                break;
            }
        } else {
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    if !(obj < options.tolerance) {
        return Err(Error::estimation(
            "correlation-prior equations did not converge",
            Some(format!("objective {obj:.3e} after {iterations} iterations, z₀/σ₀ = {:?}", x.as_slice())),
        ));
    }
    Ok(finish(x, obj, iterations))
}

/// How σ enters the induced ρ draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// σ held at the belief's guess.
    Fixed,
    /// `λ = 1/σ² ~ Gamma(a₀/2, rate b₀/2)`.
    Gamma { a0: f64, b0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoPriorSample {
    pub mean: DVector<f64>,
    pub sd: DVector<f64>,
    /// Pairwise correlations in the order (0,1), (0,2), …, (1,2), ….
    pub correlations: Vec<f64>,
    /// Largest `ρᵀD_n^{1/2}S_n⁻¹D_n^{1/2}ρ` seen; always below 1.
    pub max_constraint: f64,
    pub draws: Option<Vec<DVector<f64>>>,
}

/// Draws from the correlation prior induced by `z₀` and τ:
/// `v = S_n^{1/2} u/(1 + ‖u‖²)^{1/2}` with `u = z₀/σ + τN`, `ρ = D_n^{-1/2} v`.
pub fn sample_rho_prior(
    z0: &DVector<f64>,
    belief: &CorrelationBelief,
    m: usize,
    sigma: SigmaMode,
    keep_draws: bool,
    stream: RngStream,
) -> Result<RhoPriorSample> {
    belief.validate()?;
    let p = belief.p();
    if z0.len() != p || m == 0 {
        return Err(Error::domain("z0 must have length p and m must be positive"));
    }
    let half = spd_power(&belief.sn, 0.5, "Sn")?;
    let sd = belief.sd();
    let sn_inv = spd_inverse(&belief.sn, "Sn")?;
    let mut rng = stream.rng();
    let mut sum = DVector::zeros(p);
    let mut cross = DMatrix::zeros(p, p);
    let mut max_constraint = 0.0f64;
    let mut draws = keep_draws.then(|| Vec::with_capacity(m));
    for _ in 0..m {
        let s = match sigma {
            SigmaMode::Fixed => belief.sigma0,
            SigmaMode::Gamma { a0, b0 } => sample_gamma(0.5 * a0, 0.5 * b0, &mut rng)?.sqrt().recip(),
        };
        let u = z0 / s + DVector::from_fn(p, |_, _| belief.tau * sample_std_normal(&mut rng));
        let v = &half * squash(&u).0;
        max_constraint = max_constraint.max(quad_form(&sn_inv, &v));
        let rho = v.component_div(&sd);
        sum += &rho;
        cross += &rho * rho.transpose();
        if let Some(d) = draws.as_mut() {
            d.push(rho);
        }
    }
    let mf = m as f64;
    let mean = sum / mf;
    let cov = cross / mf - &mean * mean.transpose();
    let sds = cov.diagonal().map(|v| v.max(0.0).sqrt());
    let mut correlations = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            correlations.push(cov[(i, j)] / (sds[i] * sds[j]));
        }
    }
    Ok(RhoPriorSample {
        mean,
        sd: sds,
        correlations,
        max_constraint,
        draws,
    })
}

/// Gamma hyperparameters for λ = 1/σ² from the guess `κ̂` of the outcome sd:
/// `s* = κ̂²(1 − v₀ᵀS_n⁻¹v₀)`, `m = n − 1`, `a₀ = (m−2)²(m−4)/m²`, `b₀ = a₀ s*`.
pub fn match_gamma_hyperparams(
    kappa_hat: f64,
    v0: &DVector<f64>,
    sn: &DMatrix<f64>,
    n: usize,
) -> Result<(f64, f64)> {
    if !(kappa_hat > 0.0 && kappa_hat.is_finite()) {
        return Err(Error::domain("kappa_hat must be positive"));
    }
    if n < 6 {
        return Err(Error::domain("need n ≥ 6 so that m − 4 > 0"));
    }
    let q = quad_form(&spd_inverse(sn, "Sn")?, v0);
    if q >= 1.0 {
        return Err(Error::domain("v₀ᵀSn⁻¹v₀ must be below 1"));
    }
    let s_star = kappa_hat * kappa_hat * (1.0 - q);
    let m = (n - 1) as f64;
    let a0 = (m - 2.0).powi(2) * (m - 4.0) / (m * m);
    Ok((a0, a0 * s_star))
}

/// Subtracts column means; returns the centred matrix and the means.
pub fn center_covariates(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let means = DVector::from_fn(x.ncols(), |j, _| x.column(j).mean());
    let mut centred = x.clone();
    for (j, mut col) in centred.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (centred, means)
}

/// Covariance of the columns with divisor n.
pub fn covariate_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (c, _) = center_covariates(x);
    c.transpose() * &c / x.nrows() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElicitedPrior {
    pub z0: DVector<f64>,
    pub b_bar: DVector<f64>,
    pub tau: f64,
    pub c0: f64,
    pub a0: f64,
    pub b0: f64,
    pub intercept: f64,
    pub sn: DMatrix<f64>,
}

impl ElicitedPrior {
    /// GN prior for `(intercept, b)` on centred covariates:
    /// precision `λ c₀ diag(1, S_n)` around `(intercept, b̄)`.
    pub fn to_gn_prior(&self) -> Result<GnPrior> {
        let p = self.b_bar.len();
        let mut beta0 = DVector::zeros(p + 1);
        beta0[0] = self.intercept;
        beta0.rows_mut(1, p).copy_from(&self.b_bar);
        let mut omega0 = DMatrix::zeros(p + 1, p + 1);
        omega0[(0, 0)] = 1.0;
        omega0.view_mut((1, 1), (p, p)).copy_from(&self.sn);
        GnPrior::new(self.a0, self.b0, beta0, self.c0, omega0)
    }
}

/// Runs the whole elicitation: solve for z₀, match the gamma prior and
/// record the intercept guess.
pub fn elicit(
    belief: &CorrelationBelief,
    kappa_hat: f64,
    n: usize,
    intercept: f64,
    options: &SolverOptions,
    stream: RngStream,
) -> Result<(ElicitedPrior, Z0Solution)> {
    let solution = solve_z0(belief, options, stream)?;
    let (a0, b0) = match_gamma_hyperparams(kappa_hat, &belief.v0(), &belief.sn, n)?;
    Ok((
        ElicitedPrior {
            z0: solution.z0.clone(),
            b_bar: solution.b_bar.clone(),
            tau: belief.tau,
            c0: belief.c0()?,
            a0,
            b0,
            intercept,
            sn: belief.sn.clone(),
        },
        solution,
    ))
}

/// `v = S_n b / κ` with `κ² = bᵀS_n b + σ²`.
pub fn v_from_coefficients(b: &DVector<f64>, sigma: f64, sn: &DMatrix<f64>) -> DVector<f64> {
    let kappa = (quad_form(sn, b) + sigma * sigma).sqrt();
    sn * b / kappa
}

/// Inverse of [`v_from_coefficients`]: `b = σ S_n⁻¹ v / (1 − vᵀS_n⁻¹v)^{1/2}`.
pub fn coefficients_from_v(v: &DVector<f64>, sigma: f64, sn: &DMatrix<f64>) -> Result<DVector<f64>> {
    let sn_inv = spd_inverse(sn, "Sn")?;
    let q = quad_form(&sn_inv, v);
    if q >= 1.0 {
        return Err(Error::domain("vᵀSn⁻¹v must be below 1"));
    }
    Ok(sn_inv * v * (sigma / (1.0 - q).sqrt()))
}

/// Plain-data form of an elicitation problem, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElicitationInput {
    pub rho0: Vec<f64>,
    pub sigma0: f64,
    pub tau: f64,
    /// Covariate covariance, row by row.
    pub sn: Vec<Vec<f64>>,
    /// Guess for the marginal sd of the outcome.
    pub kappa_hat: f64,
    pub n: usize,
    /// Prior mean of the intercept.
    #[serde(default)]
    pub intercept: f64,
}

impl ElicitationInput {
    /// Three covariates (200 m, 1000 m, 5000 m) for 27 skaters predicting the
    /// 1500 m time, with correlation guesses 0.6, 0.8, 0.6.
    pub fn speedskating() -> Self {
        serde_json::from_str(include_str!("../fixtures/speedskating_belief.json"))
            .expect("bundled elicitation fixture parses")
    }

    pub fn belief(&self) -> Result<CorrelationBelief> {
        let p = self.rho0.len();
        if self.sn.len() != p || self.sn.iter().any(|row| row.len() != p) {
            return Err(Error::domain("sn must be a p×p array matching rho0"));
        }
        let sn = DMatrix::from_fn(p, p, |i, j| self.sn[i][j]);
        CorrelationBelief::new(DVector::from_vec(self.rho0.clone()), self.sigma0, self.tau, sn)
    }
}
