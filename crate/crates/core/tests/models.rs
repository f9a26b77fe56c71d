use mccavi::mc_cavi::{McCaviRun, McSchedule};
use mccavi::models::model1::{self, Model1, TauUpdate, TAU, VARTHETA};
use mccavi::models::model2::{self, Model2, Truth};
use mccavi::models::nmr::{
    fixture_templates, generate_fixture, lorentzian, NmrModel, Spectrum, Wavelet, PEAKS, WAVELETS,
};
use mccavi::stats::{Distribution, RngHandle};
use mccavi::vi::{run_cavi, ModelSpec};

#[test]
fn model1_cavi_fixed_point_matches_closed_form() {
    let x = model1::generate(1000, &mut RngHandle::new(18733));
    let model = Model1::new(x.clone()).unwrap();
    let out = run_cavi(&model, model.default_init(), 1e-4, 100).unwrap();
    assert!(out.converged_at <= 3, "converged at sweep {}", out.converged_at);

    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    let Some(Distribution::Gamma { shape, rate }) = out.state.block(TAU).factor else {
        panic!("tau factor is not a gamma");
    };
    let Some(Distribution::Normal { mean, variance }) = out.state.block(VARTHETA).factor else {
        panic!("vartheta factor is not a normal");
    };
    assert_eq!(shape, 501.5);
    let e_tau = shape / rate;
    // vartheta | tau ~ N(n xbar / (1 + n), 1 / ((1 + n) E tau))
    assert!((mean - sum / (1.0 + n)).abs() <= 1e-9 * mean.abs());
    assert!((variance - 1.0 / ((1.0 + n) * e_tau)).abs() <= 1e-9 * variance);
    // zeta recomputed from the final vartheta factor; the tau factor lags
    // by one half-sweep, so compare against the moments it was built from
    let zeta = |m: f64, v: f64| 1.0 + ((1.0 + n) * (v + m * m) - 2.0 * sum * m + sum_sq) / 2.0;
    let rate_from_final = zeta(mean, variance);
    assert!((rate - rate_from_final).abs() <= 1e-4 * rate, "{rate} vs {rate_from_final}");
}

#[test]
fn model1_mc_tau_block_tracks_cavi() {
    let x = model1::generate(1000, &mut RngHandle::new(18733));
    let exact = Model1::new(x.clone()).unwrap();
    let target = run_cavi(&exact, exact.default_init(), 1e-10, 100)
        .unwrap()
        .state
        .moment(TAU, "E(tau)")
        .unwrap();
    let model = Model1::new(x).unwrap().with_tau_update(TauUpdate::MonteCarlo);
    let mut run = McCaviRun::new(&model, model.initial_state(), McSchedule::new(100, 20, 1000).unwrap(), RngHandle::new(1));
    run.run(40).unwrap();
    let est = run.trace.tail_mean("E(tau)", 10).unwrap();
    assert!((est / target - 1.0).abs() < 0.01, "{est} vs {target}");
}

#[test]
fn model2_generator_matches_truth_curve() {
    let truth = Truth::default();
    let n = 100;
    let y = model2::generate(n, truth, &mut RngHandle::new(43));
    assert_eq!(y.len(), n);
    let curve = truth.curve(n);
    // residuals have precision 3 around the curve
    let resid: Vec<f64> = y.iter().zip(&curve).map(|(a, b)| a - b).collect();
    let m = resid.iter().sum::<f64>() / n as f64;
    let v = resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(m.abs() < 0.25 && (0.2..0.5).contains(&v), "mean {m}, var {v}");
}

#[test]
fn model2_mc_cavi_inner_chains_respect_bounds() {
    let y = model2::generate(100, Truth::default(), &mut RngHandle::new(43));
    let model = Model2::new(y).unwrap();
    let mut run = McCaviRun::new(&model, model.initial_state(), McSchedule::new(10, 20, 10).unwrap(), RngHandle::new(2));
    for _ in 0..50 {
        run.step().unwrap();
        for ch in run.chains.iter().flatten() {
            let (k, p) = (ch.values[0], ch.values[1]);
            assert!(k.abs() < p && p < 2.0, "kappa {k}, psi {p}");
        }
    }
    let fit = model.fitted_curve(&run.state).unwrap();
    assert!(fit.iter().all(|v| v.is_finite()));
}

#[test]
fn lorentzian_has_unit_area_and_half_width() {
    let g = 0.01;
    let h = 1e-5;
    let area: f64 = (-200_000..=200_000).map(|k| lorentzian(k as f64 * h, g) * h).sum();
    // tails beyond +-2 carry 2 g / (2 pi) / 2 of the mass
    assert!((area - 1.0).abs() < 4e-3);
    assert!((lorentzian(0.5 * g, g) / lorentzian(0.0, g) - 0.5).abs() < 1e-12);
}

#[test]
fn wavelet_round_trip_and_parseval() {
    let w = Wavelet::sym6(512, 4).unwrap();
    let mut rng = RngHandle::new(6);
    for _ in 0..100 {
        let x: Vec<f64> = (0..512).map(|_| rng.standard_normal()).collect();
        let c = w.forward(&x).unwrap();
        let back = w.inverse(&c).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "round trip error {err}");
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        assert!((ex - ec).abs() < 1e-10 * ex, "energy {ex} vs {ec}");
    }
}

#[test]
fn wavelet_synthesis_columns_match_inverse() {
    let w = Wavelet::sym6(64, 3).unwrap();
    let cols = w.synthesis_columns();
    for l in [0, 5, 17, 40, 63] {
        let mut e = vec![0.0; 64];
        e[l] = 1.0;
        let dense = w.inverse(&e).unwrap();
        let mut sparse = vec![0.0; 64];
        for &(i, v) in &cols[l] {
            sparse[i] = v;
        }
        for i in 0..64 {
            assert!((dense[i] - sparse[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn nmr_flat_spectrum_gives_near_zero_concentrations() {
    let n = 512;
    let x: Vec<f64> = (0..n).map(|i| 1.0 + 3.0 * i as f64 / (n - 1) as f64).collect();
    let mut rng = RngHandle::new(7);
    let y: Vec<f64> = (0..n).map(|_| 1.0 + 0.01 * rng.standard_normal()).collect();
    let spectrum = Spectrum::new(x, y).unwrap();
    let model = NmrModel::new(&spectrum, fixture_templates()).unwrap();
    let mut run = McCaviRun::new(&model, model.initial_state(), McSchedule::new(10, 100, 10).unwrap(), RngHandle::new(8));
    run.run(200).unwrap();
    // bound: 3 sd of the half-normal prior TN(0, 1/precision, 0, inf)
    let prior_var = 1.0 / model.priors().beta_precision;
    let half_normal_sd = (prior_var * (1.0 - 2.0 / std::f64::consts::PI)).sqrt();
    for (m, b) in run.state.moment_vec(PEAKS, "E(beta)").unwrap().iter().enumerate() {
        assert!(*b >= 0.0 && *b < 3.0 * half_normal_sd, "beta[{m}] = {b}");
    }
}

#[test]
fn nmr_mc_cavi_inner_chains_respect_constraints() {
    let fixture = generate_fixture(&mut RngHandle::new(2)).unwrap();
    let model = NmrModel::new(&fixture.spectrum, fixture.templates.clone()).unwrap();
    let n = model.n();
    let mut run = McCaviRun::new(&model, model.initial_state(), McSchedule::new(10, 50, 10).unwrap(), RngHandle::new(3));
    for _ in 0..100 {
        run.step().unwrap();
        let ch = run.chains[WAVELETS].as_ref().unwrap();
        model.check_constraints(&ch.values[..n], &ch.values[n..2 * n]).unwrap();
    }
}
