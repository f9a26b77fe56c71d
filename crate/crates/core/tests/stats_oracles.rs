mod common;

use common::{empirical, moment_suite, normalization_suite, quad_cdf, std_normal_pdf, truncated_moment_suite};
use mccavi::stats::{
    normal_cdf, normal_quantile, sample_truncated_normal, truncated_normal_log_pdf, truncated_normal_moments,
    Distribution, RngHandle,
};

#[test]
fn every_variant_integrates_to_one() {
    normalization_suite().unwrap();
}

#[test]
fn log_pdf_hand_values() {
    let n = Distribution::normal(0.0, 1.0).unwrap();
    assert!((n.log_pdf(0.0) + 0.918_938_533_204_672_8).abs() < 1e-15);
    assert!((Distribution::gamma(1.0, 1.0).unwrap().log_pdf(2.0) + 2.0).abs() < 1e-14);
    assert_eq!(Distribution::uniform(0.0, 1.0).unwrap().log_pdf(2.0), f64::NEG_INFINITY);
    assert_eq!(Distribution::gamma(2.0, 1.0).unwrap().log_pdf(-1.0), f64::NEG_INFINITY);
}

#[test]
fn truncated_log_pdf_against_quadrature_cdf() {
    // Phi from Simpson integration of the density, independent of erfc
    let phi = std_normal_pdf;
    let cdf = quad_cdf;
    let s = 10f64.sqrt();
    let expected = (phi(0.0) / s).ln() - (cdf(2.0 / s) - cdf(-2.0 / s)).ln();
    let d = Distribution::truncated_normal(0.0, 10.0, -2.0, 2.0).unwrap();
    assert!((d.log_pdf(0.0) - expected).abs() < 1e-12);
    assert!((truncated_normal_log_pdf(0.0, 0.0, 10.0, -2.0, 2.0) - expected).abs() < 1e-12);
}

#[test]
fn normal_cdf_against_quadrature() {
    for x in [0.0, 0.3, 1.0, 1.7, 1.96, 2.5, 4.0, 6.0] {
        let oracle = quad_cdf(x);
        assert!((normal_cdf(x) - oracle).abs() < 1e-12, "x = {x}");
        assert!((normal_cdf(-x) - (1.0 - oracle)).abs() < 1e-12, "x = -{x}");
    }
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.96) - 0.975_002_1).abs() < 1e-7);
    for x in [0.3, 1.7, 4.0] {
        assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
    }
}

#[test]
fn quantile_round_trip() {
    for p in [1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-9] {
        let x = normal_quantile(p);
        assert!((normal_cdf(x) - p).abs() < 1e-12 * p.max(1e-3), "p = {p}");
    }
}

#[test]
fn sample_moments_within_five_standard_errors() {
    moment_suite(11).unwrap();
}

#[test]
fn spec_sampling_examples() {
    let mut rng = RngHandle::new(5);
    let tn = Distribution::truncated_normal(0.0, 10.0, -2.0, 2.0).unwrap();
    assert!((0..100_000).all(|_| (-2.0..=2.0).contains(&tn.sample(&mut rng))));
    let (m, _) = empirical(100_000, || Distribution::normal(5.0, 4.0).unwrap().sample(&mut rng));
    assert!((m - 5.0).abs() < 4.0 * 2.0 / 100_000f64.sqrt());
    let g = Distribution::gamma(3.0, 2.0).unwrap();
    let (m, _) = empirical(1_000_000, || g.sample(&mut rng));
    assert!((m / 1.5 - 1.0).abs() < 0.01);
}

#[test]
fn half_normal_mean_matches_closed_form_and_monte_carlo() {
    let (m, _) = truncated_normal_moments(0.0, 1.0, 0.0, f64::INFINITY).unwrap();
    assert!((m - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    assert!((m - 0.797_884_6).abs() < 1e-7);
    let mut rng = RngHandle::new(17);
    let k = 10_000_000;
    let mc = (0..k).map(|_| rng.standard_normal().abs()).sum::<f64>() / k as f64;
    let se = ((1.0 - 2.0 / std::f64::consts::PI) / k as f64).sqrt();
    assert!((mc - m).abs() < 5.0 * se);
}

#[test]
fn truncated_moments_against_rejection_sampling() {
    truncated_moment_suite(23, 29).unwrap();
}

#[test]
fn far_tail_sampling_stays_inside() {
    let mut rng = RngHandle::new(3);
    for (lo, hi) in [(8.0, 9.0), (-40.0, -39.5), (30.0, f64::INFINITY), (1e-9, 2e-9)] {
        for _ in 0..10_000 {
            let x = sample_truncated_normal(0.0, 1.0, lo, hi, &mut rng);
            assert!(x >= lo && x <= hi, "{x} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn equal_seeds_give_identical_streams() {
    let d = Distribution::truncated_normal(0.3, 2.0, -1.0, 1.5).unwrap();
    let mut a = RngHandle::new(99);
    let mut b = RngHandle::new(99);
    for _ in 0..1000 {
        assert_eq!(d.sample(&mut a).to_bits(), d.sample(&mut b).to_bits());
    }
    let mut c1 = RngHandle::new(99).child(1);
    let mut c2 = RngHandle::new(99).child(2);
    assert_ne!(c1.uniform(), c2.uniform());
}
