//! Distribution functions the closed-form routes need: central and
//! noncentral chi-square ratios, chi-square tails, and the normal.

use once_cell_free::gl_rule;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Truncation threshold for the Poisson tail mass in the noncentral series.
const SERIES_TAIL: f64 = 1e-13;

/// Above this excentricity the series needs too many terms; the integral
/// representation takes over.
const SERIES_MAX_KAPPA: f64 = 1e6;

const KAPPA_LIMIT: f64 = 1e300;

/// Evaluation point, excentricity and common degrees of freedom of the
/// ratio `χ²_p(κ) / χ²_p` (no degrees-of-freedom normalization).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoncentralFParams {
    pub v: f64,
    pub kappa: f64,
    pub p: u32,
}

impl NoncentralFParams {
    pub fn new(v: f64, kappa: f64, p: u32) -> Result<Self> {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::domain(format!("evaluation point must be finite and > 0, got {v}")));
        }
        if !kappa.is_finite() || !(0.0..=KAPPA_LIMIT).contains(&kappa) {
            return Err(Error::domain(format!("excentricity must be finite and >= 0, got {kappa}")));
        }
        if p == 0 {
            return Err(Error::domain("degrees of freedom must be >= 1"));
        }
        Ok(NoncentralFParams { v, kappa, p })
    }

    pub fn cdf(&self) -> f64 {
        if self.kappa <= SERIES_MAX_KAPPA {
            poisson_series(self.v, self.kappa, self.p)
        } else {
            large_excentricity(self.v, self.kappa, self.p)
        }
    }
}

/// `Pr{χ²_p(κ)/χ²_p ≤ v}`.
pub fn noncentral_f_cdf(v: f64, kappa: f64, p: u32) -> Result<f64> {
    Ok(NoncentralFParams::new(v, kappa, p)?.cdf())
}

/// Poisson mixture of regularized incomplete beta functions,
/// `Σ_k Pois(k; κ/2) I_x(p/2 + k, p/2)` with `x = v/(1+v)`.
///
/// `I_x(a+1, b) = I_x(a, b) − t_a`, `t_a = x^a (1−x)^b / (a B(a, b))`, so a
/// single incomplete beta evaluation at the Poisson mode seeds the sum in
/// both directions and only `O(√κ)` terms are needed.
pub(crate) fn poisson_series(v: f64, kappa: f64, p: u32) -> f64 {
    let x = v / (1.0 + v);
    let b = 0.5 * p as f64;
    let lambda = 0.5 * kappa;
    if lambda == 0.0 {
        return beta_reg(b, b, x).clamp(0.0, 1.0);
    }
    let ln_x = x.ln();
    let ln_1mx = (-x).ln_1p();
    let ln_lambda = lambda.ln();
    let ln_t_at = |a: f64| a * ln_x + b * ln_1mx - a.ln() - ln_beta(a, b);

    let mode = lambda.floor();
    let a_mode = b + mode;
    let ibeta_mode = beta_reg(a_mode, b, x);
    let ln_w_mode = -lambda + mode * ln_lambda - ln_gamma(mode + 1.0);

    // upward from the mode, inclusive
    let mut sum = 0.0;
    let (mut a, mut ibeta, mut ln_w, mut k) = (a_mode, ibeta_mode, ln_w_mode, mode);
    let mut ln_t = ln_t_at(a);
    loop {
        let w = ln_w.exp();
        sum += w * ibeta;
        let ratio = lambda / (k + 1.0);
        if (ratio < 1.0 && w * ratio / (1.0 - ratio) < SERIES_TAIL) || ibeta <= 1e-300 {
            break;
        }
        ibeta = (ibeta - ln_t.exp()).max(0.0);
        ln_t += ln_x + (a + b).ln() - (a + 1.0).ln();
        a += 1.0;
        k += 1.0;
        ln_w += ln_lambda - k.ln();
    }

    // downward from the mode, exclusive
    let (mut a, mut ibeta, mut ln_w, mut k) = (a_mode, ibeta_mode, ln_w_mode, mode);
    while k >= 1.0 {
        let ln_t_prev = ln_t_at(a - 1.0);
        ibeta = (ibeta + ln_t_prev.exp()).min(1.0);
        ln_w += k.ln() - ln_lambda;
        a -= 1.0;
        k -= 1.0;
        let w = ln_w.exp();
        sum += w * ibeta;
        let ratio = k / lambda;
        if ratio < 1.0 && w * ratio / (1.0 - ratio) < SERIES_TAIL {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// `E_{X,C}[ Pr{χ²_p ≥ ((X + √κ)² + C)/v} ]` with `X ~ N(0,1)` and
/// `C ~ χ²_{p−1}` independent. Smooth in `(X, C)` whenever `κ` is large.
fn large_excentricity(v: f64, kappa: f64, p: u32) -> f64 {
    let root = kappa.sqrt();
    let half_p = 0.5 * p as f64;
    let upper = |s: f64| gamma_ur(half_p, 0.5 * s / v);
    let gl = gl_rule();
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if p == 1 {
        return gl
            .composite(|x| phi(x) * upper((x + root).powi(2)), -10.0, 10.0, 80)
            .clamp(0.0, 1.0);
    }
    // C = u², density of u: 2 u^{d−1} e^{−u²/2} / (2^{d/2} Γ(d/2))
    let d = (p - 1) as f64;
    let ln_norm = -(0.5 * d) * std::f64::consts::LN_2 - ln_gamma(0.5 * d) + std::f64::consts::LN_2;
    let u_max = (d + 40.0 * (2.0 * d).sqrt() + 100.0).sqrt();
    let density_u = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            (ln_norm + (d - 1.0) * u.ln() - 0.5 * u * u).exp()
        }
    };
    gl.composite(
        |x| {
            let shift = (x + root).powi(2);
            phi(x) * gl.composite(|u| density_u(u) * upper(shift + u * u), 0.0, u_max, 24)
        },
        -10.0,
        10.0,
        48,
    )
    .clamp(0.0, 1.0)
}

/// The excentricity κ with `F(v, κ, p) = u`.
///
/// The CDF decreases strictly in κ, from `F(v, 0, p)` towards 0, so the root
/// is bracketed by doubling and then bisected.
pub fn noncentral_f_excentre_inverse(v: f64, u: f64, p: u32) -> Result<f64> {
    let params = NoncentralFParams::new(v, 0.0, p)?;
    if !u.is_finite() || u <= 0.0 {
        return Err(Error::domain(format!("target probability must be in (0, 1), got {u}")));
    }
    let top = params.cdf();
    if (u - top).abs() <= 1e-10 {
        return Ok(0.0);
    }
    if u > top {
        return Err(Error::NoSolution(format!(
            "F({v}, κ, {p}) never exceeds {top}, asked for {u}"
        )));
    }
    let f = |kappa: f64| NoncentralFParams { v, kappa, p }.cdf();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) >= u {
        lo = hi;
        hi *= 2.0;
        if hi > KAPPA_LIMIT {
            return Err(Error::NoSolution(format!("no excentricity reaches {u}")));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm - u).abs() <= 1e-13 {
            return Ok(mid);
        }
        if fm > u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Pr{χ²_df ≥ x}`.
pub fn chi_square_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(0.5 * df, 0.5 * x)
    }
}

pub fn chi_square_cdf(df: f64, x: f64) -> f64 {
    1.0 - chi_square_sf(df, x)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

mod once_cell_free {
    use std::sync::OnceLock;

    use crate::stats::quad::GaussLegendre;

    pub fn gl_rule() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cauchy_ratio(v: f64) -> f64 {
        2.0 / PI * v.sqrt().atan()
    }

    #[test]
    fn symmetric_point_is_one_half() {
        assert!((noncentral_f_cdf(1.0, 0.0, 1).unwrap() - 0.5).abs() < 1e-14);
        for p in 1..8 {
            assert!((noncentral_f_cdf(1.0, 0.0, p).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn central_case_matches_cauchy_ratio() {
        for i in 1..=100 {
            let v = 0.1 * i as f64;
            let got = noncentral_f_cdf(v, 0.0, 1).unwrap();
            assert!((got - cauchy_ratio(v)).abs() < 1e-12, "v={v}");
        }
        assert!((noncentral_f_cdf(4.0, 0.0, 1).unwrap() - 0.704_832_764_699_133_6).abs() < 1e-12);
    }

    #[test]
    fn maximal_ppp_example() {
        let f = noncentral_f_cdf(1.1, 0.0, 1).unwrap();
        assert!((f - 0.515_163_347_982_104).abs() < 1e-12);
    }

    // Oracle: for p = 1, F(v, κ) = E_X[2 Φ̄(|X + √κ|/√v)], integrated with
    // Gauss–Legendre independently of the Poisson series.
    // Checked against mpmath at (0.3, 0.01): 0.317667433731265974.
    fn p1_oracle(v: f64, kappa: f64) -> f64 {
        let gl = GaussLegendre::new(30);
        let root = kappa.sqrt();
        let f = |x: f64| {
            let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            phi * 2.0 * normal_sf((x + root).abs() / v.sqrt())
        };
        // split at the kink of |x + √κ|
        let kink = -root;
        gl.composite(f, kink - 40.0, kink, 400) + gl.composite(f, kink, kink + 40.0, 400)
    }
    use crate::stats::quad::GaussLegendre;

    #[test]
    fn series_matches_integral_oracle() {
        for &v in &[0.3, 1.0, 1.1, 2.5, 11.0] {
            for &kappa in &[0.01, 0.5, 2.0, 10.0, 80.0, 400.0] {
                let got = noncentral_f_cdf(v, kappa, 1).unwrap();
                let want = p1_oracle(v, kappa);
                assert!((got - want).abs() < 1e-10, "v={v} κ={kappa}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn large_excentricity_path_agrees_with_series_at_switchover() {
        for &(v, kappa, p) in &[(4e5, 1.2e6, 1), (3e5, 1.1e6, 3), (1.0e6, 2.0e6, 2)] {
            let series = poisson_series(v, kappa, p);
            let integral = large_excentricity(v, kappa, p);
            assert!((series - integral).abs() < 1e-8, "p={p}: {series} vs {integral}");
        }
    }

    #[test]
    fn scipy_reference_values() {
        // scipy.stats.ncf(p, p, κ).cdf(v) at these points
        let cases = [
            (1.1, 2.388_205_298_003_993, 1, 0.25),
            (1.0 + 6.25 / 27.0, 0.0, 3, 0.565_920_763_729_749_3),
            (1e5, 2e5, 1, 0.157_301_282_582_581_33),
            (50.0, 900.0, 2, 0.000_144_340_994_687_788_89),
        ];
        for (v, kappa, p, want) in cases {
            let got = noncentral_f_cdf(v, kappa, p).unwrap();
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn monotone_in_v_and_kappa() {
        for p in [1u32, 2, 3, 5] {
            let mut prev_row: Option<Vec<f64>> = None;
            for ki in 0..15 {
                let kappa = 0.37 * ki as f64;
                let row: Vec<f64> = (1..40)
                    .map(|vi| noncentral_f_cdf(0.15 * vi as f64, kappa, p).unwrap())
                    .collect();
                for w in row.windows(2) {
                    assert!(w[1] >= w[0] - 1e-14);
                }
                if let Some(prev) = &prev_row {
                    for (a, b) in prev.iter().zip(&row) {
                        assert!(b <= &(a + 1e-14));
                    }
                }
                prev_row = Some(row);
            }
        }
        let big = noncentral_f_cdf(1e9, 5.0, 2).unwrap();
        assert!(big > 1.0 - 1e-6);
    }

    #[test]
    fn small_v_and_large_kappa_edges() {
        assert!(noncentral_f_cdf(1e-8, 0.0, 1).unwrap() < 1e-4);
        assert!(noncentral_f_cdf(1.0, 5e5, 1).unwrap() < 1e-12);
        assert!(noncentral_f_cdf(1e14, 1e14, 1).unwrap() > 0.3);
    }

    #[test]
    fn invalid_inputs_are_domain_errors() {
        assert!(matches!(noncentral_f_cdf(f64::NAN, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(noncentral_f_cdf(1.0, -1.0, 1), Err(Error::Domain(_))));
        assert!(matches!(noncentral_f_cdf(0.0, 1.0, 1), Err(Error::Domain(_))));
        assert!(matches!(noncentral_f_cdf(1.0, 1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(noncentral_f_cdf(f64::INFINITY, 1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn excentre_inverse_examples() {
        assert_eq!(noncentral_f_excentre_inverse(1.0, 0.5, 1).unwrap(), 0.0);
        let k = noncentral_f_excentre_inverse(1.1, 0.5151, 1).unwrap();
        assert!(k >= 0.0 && k < 1e-3, "{k}");
        let k = noncentral_f_excentre_inverse(1.1, 0.25, 1).unwrap();
        assert!((noncentral_f_cdf(1.1, k, 1).unwrap() - 0.25).abs() < 1e-8);
        // bisection cross-check against the scipy root
        assert!((k - 2.388_205_298_003_993).abs() < 1e-6);
    }

    #[test]
    fn excentre_inverse_errors() {
        assert!(matches!(
            noncentral_f_excentre_inverse(1.1, 0.6, 1),
            Err(Error::NoSolution(_))
        ));
        assert!(matches!(noncentral_f_excentre_inverse(1.1, 0.0, 1), Err(Error::Domain(_))));
        assert!(matches!(noncentral_f_excentre_inverse(1.1, -0.2, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn first_order_expansion_near_one() {
        // F(1 + a/n, b/n) ≈ 1/2 + (a − b)/(2πn); the gap shrinks faster than 1/n.
        let (a, b) = (2.0, 3.0);
        let scaled: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&n| {
                let exact = noncentral_f_cdf(1.0 + a / n, b / n, 1).unwrap();
                let approx = 0.5 + 0.5 * (a - b) / (PI * n);
                (exact - approx).abs() * n
            })
            .collect();
        assert!(scaled[1] < scaled[0] && scaled[2] < scaled[1], "{scaled:?}");
        assert!(scaled[2] < 1e-2);
    }

    #[test]
    fn chi_square_tail_basics() {
        assert!((chi_square_sf(2.0, 2.0) - (-1.0f64).exp()).abs() < 1e-14);
        assert!((chi_square_sf(1.0, 1.96 * 1.96) - 0.05).abs() < 1e-4);
        assert_eq!(chi_square_sf(3.0, 0.0), 1.0);
    }
}
