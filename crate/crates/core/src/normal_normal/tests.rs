use proptest::prelude::*;

use super::*;
use crate::stats::{ks_distance, EmpiricalCdf, RngStream};

fn cfg(sigma0: f64) -> NormalNormalConfig {
    NormalNormalConfig::new(10, 1.0, 0.0, sigma0).unwrap()
}

#[test]
fn ppp_at_prior_mean_is_the_ceiling() {
    let c = cfg(1.0);
    let top = c.ppp_closed_form(0.0).unwrap();
    assert!((top - 0.5151).abs() < 1e-3, "{top}");
    assert_eq!(top, c.ppp_ceiling().unwrap());
}

#[test]
fn flat_prior_gives_ppp_near_half() {
    let c = cfg(5.0);
    assert!(c.rho() > 0.996);
    for i in 0..=40 {
        let ybar = -2.0 + 0.1 * i as f64;
        let p = c.ppp_closed_form(ybar).unwrap();
        assert!((p - 0.5).abs() < 0.01, "ȳ={ybar}: {p}");
    }
}

#[test]
fn point_prior_gives_classic_pvalue() {
    let c = cfg(0.0);
    for ybar in [0.0, 0.3, -0.7, 1.5] {
        let classic = chi_square_sf(1.0, 10.0 * ybar * ybar);
        assert_eq!(c.ppp_closed_form(ybar).unwrap(), classic);
        let nearly = cfg(1e-6).ppp_closed_form(ybar).unwrap();
        assert!((nearly - classic).abs() < 1e-5, "{nearly} vs {classic}");
    }
}

#[test]
fn wide_prior_limit_is_half() {
    let p = NormalNormalConfig::new(10, 1.0, 0.0, 1e4).unwrap().ppp_closed_form(0.8).unwrap();
    assert!((p - 0.5).abs() < 1e-4);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(NormalNormalConfig::new(0, 1.0, 0.0, 1.0).is_err());
    assert!(NormalNormalConfig::new(5, 0.0, 0.0, 1.0).is_err());
    assert!(NormalNormalConfig::new(5, 1.0, 0.0, -1.0).is_err());
}

#[test]
fn null_sample_has_mean_half_and_sharp_cutoff() {
    let c = cfg(1.0);
    let mut rng = RngStream::new(11).rng();
    let draws = c.null_ppp_sample(1_000_000, &mut rng).unwrap();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((mean - 0.5).abs() < 0.002, "{mean}");
    let top = c.ppp_ceiling().unwrap();
    let max = draws.iter().cloned().fold(0.0, f64::max);
    assert!(max <= top && max > top - 1e-4);

    let ecdf = EmpiricalCdf::new(&draws);
    let gap = (1..500)
        .map(|i| {
            let u = top * i as f64 / 500.0;
            (ecdf.eval(u) - c.null_ppp_cdf(u).unwrap()).abs()
        })
        .fold(0.0, f64::max);
    assert!(gap < 0.003, "{gap}");
}

#[test]
fn null_sample_is_nearly_uniform_for_sharp_prior() {
    let c = cfg(0.001);
    let mut rng = RngStream::new(12).rng();
    let ecdf = EmpiricalCdf::new(&c.null_ppp_sample(100_000, &mut rng).unwrap());
    assert!(ks_distance(&ecdf, |u| u.clamp(0.0, 1.0)) < 0.01);
}

#[test]
fn null_cdf_endpoints() {
    let c = cfg(1.0);
    assert_eq!(c.null_ppp_cdf(c.ppp_ceiling().unwrap()).unwrap(), 1.0);
    assert_eq!(c.null_ppp_cdf(0.9).unwrap(), 1.0);
    assert_eq!(c.null_ppp_cdf(0.0).unwrap(), 0.0);
    assert!(c.null_ppp_cdf(1e-9).unwrap() < 1e-6);
}

#[test]
fn cppp_is_null_cdf_of_ppp() {
    for sigma0 in [0.1, 0.5, 1.0, 5.0] {
        let c = cfg(sigma0);
        for i in 1..=30 {
            let ybar = 0.05 * i as f64;
            let chained = c.null_ppp_cdf(c.ppp_closed_form(ybar).unwrap()).unwrap();
            let direct = c.cppp_closed_form(ybar).unwrap();
            assert!((chained - direct).abs() < 1e-6, "σ₀={sigma0} ȳ={ybar}: {chained} vs {direct}");
        }
    }
}

#[test]
fn cppp_is_uniform_under_prior_predictive() {
    let c = cfg(1.0);
    let sd = (1.0 + 1.0 / 10.0f64).sqrt();
    let mut rng = RngStream::new(13).rng();
    let values: Vec<f64> = (0..100_000)
        .map(|_| c.cppp_closed_form(sd * sample_std_normal(&mut rng)).unwrap())
        .collect();
    assert!(ks_distance(&EmpiricalCdf::new(&values), |u| u.clamp(0.0, 1.0)) < 0.005);
}

#[test]
fn calibrations_at_prior_mean_are_one() {
    let c = cfg(1.0);
    assert_eq!(c.cppp_closed_form(0.0).unwrap(), 1.0);
    assert_eq!(c.cppp_star_closed_form(0.0).unwrap(), 1.0);
}

#[test]
fn posterior_predictive_calibration_is_conservative() {
    // Near θ₀ both are close to 1 and cppp* is the smaller one; away from
    // it cppp* stays high while cppp drops.
    let c = cfg(1.0);
    assert!(c.cppp_star_closed_form(0.05).unwrap() < c.cppp_closed_form(0.05).unwrap());
    for i in 20..=60 {
        let ybar = 0.05 * i as f64;
        let star = c.cppp_star_closed_form(ybar).unwrap();
        assert!(star >= c.cppp_closed_form(ybar).unwrap());
        assert!(star > 0.25, "ȳ={ybar}: {star}");
    }
}

#[test]
fn large_sample_cppp_tends_to_conflict_tail() {
    let c = NormalNormalConfig::new(100_000_000, 1.0, 0.0, 0.5).unwrap();
    let theta_true = 0.8;
    let limit = 2.0 * normal_sf(c.conflict_measure(theta_true));
    assert!((c.cppp_closed_form(theta_true).unwrap() - limit).abs() < 1e-4);
}

#[test]
fn conflict_measure_scale() {
    let c = NormalNormalConfig::new(10, 1.0, 2.0, 0.5).unwrap();
    assert_eq!(c.conflict_measure(2.0), 0.0);
    assert!((c.conflict_measure(2.98) - 1.96).abs() < 1e-12);
    assert!((2.0 * normal_sf(1.96) - 0.05).abs() < 1e-3);
    let scaled = NormalNormalConfig::new(10, 1.0, 6.0, 1.5).unwrap();
    assert!((scaled.conflict_measure(8.94) - 1.96).abs() < 1e-12);
}

#[test]
fn prior_sigma0_calibration_hits_alpha() {
    let (n, sigma) = (10, 1.0);
    for (ybar, alpha) in [(1.2, 0.10), (0.9, 0.05), (2.0, 0.01), (0.7, 0.2)] {
        match calibrate_prior_sigma0(n, sigma, 0.0, ybar, alpha).unwrap() {
            PriorScale::Sigma0(s0) => {
                let c = NormalNormalConfig::new(n, sigma, 0.0, s0).unwrap();
                let cppp = c.cppp_closed_form(ybar).unwrap();
                assert!((cppp - alpha).abs() < 1e-10, "{cppp} vs {alpha}");
            }
            other => panic!("expected a scale, got {other:?}"),
        }
    }
}

#[test]
fn prior_sigma0_boundary_and_sharp_case() {
    let z_crit = 1.6448536269514722f64.powi(2);
    let ybar = (z_crit / 10.0).sqrt();
    match calibrate_prior_sigma0(10, 1.0, 0.0, ybar, 0.10).unwrap() {
        PriorScale::Sigma0(s0) => assert!(s0 < 1e-6),
        other => panic!("{other:?}"),
    }
    assert_eq!(
        calibrate_prior_sigma0(10, 1.0, 0.0, 0.1, 0.10).unwrap(),
        PriorScale::SharpPriorAllowed
    );
    assert!(calibrate_prior_sigma0(10, 1.0, 0.0, 0.1, 1.5).is_err());
}

fn sharp_bimixture(p2: f64) -> MixturePrior {
    MixturePrior::new(vec![
        MixtureComponent { weight: 1.0 - p2, theta0: 0.0, sigma0: 1.0 },
        MixtureComponent { weight: p2, theta0: 5.0, sigma0: 0.05 },
    ])
    .unwrap()
}

#[test]
fn single_component_mixture_reduces() {
    let mix = MixturePrior::new(vec![MixtureComponent { weight: 1.0, theta0: 0.3, sigma0: 0.7 }]).unwrap();
    let c = NormalNormalConfig::new(12, 2.0, 0.3, 0.7).unwrap();
    for ybar in [-1.0, 0.3, 2.5] {
        assert_eq!(mix.ppp(12, 2.0, ybar).unwrap(), c.ppp_closed_form(ybar).unwrap());
    }
}

#[test]
fn mixture_weights_survive_underflow() {
    let mix = sharp_bimixture(1e-3);
    for ybar in [-30.0, 0.0, 2.5, 5.0, 40.0] {
        let w = mix.posterior_weights(25, 1.0, ybar).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn sharp_component_drives_ppp_to_one() {
    let mix = MixturePrior::new(vec![
        MixtureComponent { weight: 0.999, theta0: 0.0, sigma0: 1e-4 },
        MixtureComponent { weight: 0.001, theta0: 5.0, sigma0: 1e-4 },
    ])
    .unwrap();
    assert!(mix.ppp(25, 1.0, 5.0).unwrap() > 0.99);
}

#[test]
fn bimixture_curve_is_high_at_both_modes_and_low_between() {
    let mix = sharp_bimixture(1e-3);
    let at = |y: f64| mix.ppp(25, 1.0, y).unwrap();
    assert!(at(0.0) > 0.45);
    assert!(at(5.0) > 0.8);
    let dip = (0..=100).map(|i| at(3.5 + 0.015 * i as f64)).fold(1.0, f64::min);
    assert!(dip < 0.1, "{dip}");
}

#[test]
fn mixture_rejects_bad_weights() {
    let c = |w| MixtureComponent { weight: w, theta0: 0.0, sigma0: 1.0 };
    assert!(MixturePrior::new(vec![c(0.5), c(0.4)]).is_err());
    assert!(MixturePrior::new(vec![c(1.0), c(0.0)]).is_err());
    assert!(MixturePrior::new(vec![]).is_err());
}

proptest! {
    #[test]
    fn ppp_symmetric_and_peaked_at_prior_mean(
        d in 0.0f64..3.0, theta0 in -5.0f64..5.0, sigma0 in 0.05f64..4.0, n in 1usize..200
    ) {
        let c = NormalNormalConfig::new(n, 1.3, theta0, sigma0).unwrap();
        let up = c.ppp_closed_form(theta0 + d).unwrap();
        let down = c.ppp_closed_form(theta0 - d).unwrap();
        prop_assert!((up - down).abs() < 1e-12);
        prop_assert!(up <= c.ppp_ceiling().unwrap() + 1e-14);
        prop_assert!((0.0..=1.0).contains(&up));
    }

    #[test]
    fn calibrated_values_are_probabilities(ybar in -10.0f64..10.0, sigma0 in 0.0f64..3.0) {
        let c = NormalNormalConfig::new(7, 0.8, 0.5, sigma0).unwrap();
        for v in [c.cppp_closed_form(ybar).unwrap(), c.cppp_star_closed_form(ybar).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
