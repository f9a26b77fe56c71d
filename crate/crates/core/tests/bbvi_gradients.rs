mod common;

use common::{cv_variance_fraction, gradient_worst_errors, model2_bbvi, GRADIENT_NAMES};
use mccavi::bbvi::{rb_gradient, BbviModel, FactorFamily, NormalFactor};
use mccavi::models::model2::KappaPsiFactor;
use mccavi::stats::RngHandle;

#[test]
fn all_eight_gradients_match_finite_differences() {
    for (name, w) in GRADIENT_NAMES.iter().zip(gradient_worst_errors()) {
        assert!(w < 1e-6, "{name}: worst relative error {w:e}");
    }
}

#[test]
fn score_edge_cases() {
    let mut s = [0.0; 2];
    NormalFactor.score(&[1.3, 0.4], &[1.3], &mut s);
    assert_eq!(s[0], 0.0);
    let mut s4 = [0.0; 4];
    // q(psi) concentrated far below the upper bound, evaluated right at it
    KappaPsiFactor.score(&[0.0, -1.0, -5.0, -3.0], &[0.5, 2.0 - 1e-9], &mut s4);
    assert!(s4.iter().all(|v| v.is_finite()), "{s4:?}");
}

#[test]
fn exact_factor_has_mean_zero_gradient() {
    // log c equals log q up to a constant, so the ELBO is at its optimum
    let l = [0.7, -0.4];
    let log_c = |z: &[f64]| -0.5 * (z[0] - l[0]).powi(2) * (-l[1]).exp() + 3.0;
    let mut rng = RngHandle::new(4);
    let reps = 400;
    let mut sums = [0.0; 2];
    let mut sq = [0.0; 2];
    for _ in 0..reps {
        let g = rb_gradient(&NormalFactor, &l, &log_c, 50, false, &mut rng).unwrap().gradient;
        for j in 0..2 {
            sums[j] += g[j];
            sq[j] += g[j] * g[j];
        }
        let cv = rb_gradient(&NormalFactor, &l, &log_c, 50, true, &mut rng).unwrap();
        assert!(cv.gradient.iter().all(|v| v.abs() < 1e-9), "{:?}", cv.gradient);
    }
    for j in 0..2 {
        let m = sums[j] / reps as f64;
        let se = ((sq[j] / reps as f64 - m * m) / reps as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "coordinate {j}: mean {m}, se {se}");
    }
}

#[test]
fn vartheta_gradient_matches_elbo_finite_difference() {
    let model = model2_bbvi();
    let lambda = model.initial_lambda();
    let cache = model.cache(&lambda);
    let log_c = |z: &[f64]| model.log_c(0, z, &lambda, &cache);

    // oracle: ELBO terms in lambda_vartheta with common standard-normal draws
    let mut rng = RngHandle::new(5);
    let eps: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
    let local = |l: &[f64], e: f64| {
        let z = [l[0] + (0.5 * l[1]).exp() * e];
        log_c(&z) - NormalFactor.log_q(l, &z)
    };
    let h = 1e-3;
    let mut oracle = [0.0; 2];
    let mut oracle_se = [0.0; 2];
    for j in 0..2 {
        let d: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let mut up = lambda[0].clone();
                let mut dn = lambda[0].clone();
                up[j] += h;
                dn[j] -= h;
                (local(&up, e) - local(&dn, e)) / (2.0 * h)
            })
            .collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        oracle[j] = m;
        oracle_se[j] = (v / d.len() as f64).sqrt();
    }

    let reps = 200;
    let mut gs = vec![Vec::with_capacity(reps); 2];
    for _ in 0..reps {
        let g = rb_gradient(&NormalFactor, &lambda[0], &log_c, 50, true, &mut rng).unwrap().gradient;
        gs[0].push(g[0]);
        gs[1].push(g[1]);
    }
    for j in 0..2 {
        let m = gs[j].iter().sum::<f64>() / reps as f64;
        let v = gs[j].iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (v / reps as f64 + oracle_se[j].powi(2)).sqrt();
        assert!((m - oracle[j]).abs() < 3.0 * se, "coordinate {j}: {m} vs {} (se {se})", oracle[j]);
    }
}

#[test]
fn control_variates_reduce_variance_in_most_coordinates() {
    let frac = cv_variance_fraction(20, 50);
    assert!(frac >= 0.9, "control variates helped in {:.1}% of coordinates", 100.0 * frac);
}
