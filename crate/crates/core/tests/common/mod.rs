//! Oracles shared by the module suites and the acceptance runner.
#![allow(dead_code)]

use mccavi::bbvi::{rb_gradient, BbviModel, FactorFamily, GammaFactor, NormalFactor};
use mccavi::models::model2::{self, KappaPsiFactor, Model2Bbvi, Truth};
use mccavi::stats::{truncated_normal_moments, Distribution, RngHandle};

/// Composite Simpson rule, written here so the oracle shares no code with the
/// library's Gauss-Legendre rule.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Phi by quadrature of the density.
pub fn quad_cdf(x: f64) -> f64 {
    0.5 + simpson(std_normal_pdf, 0.0, x, 40_000)
}

pub fn variants() -> Vec<Distribution> {
    vec![
        Distribution::normal(0.0, 1.0).unwrap(),
        Distribution::normal(-3.0, 0.01).unwrap(),
        Distribution::normal(10.0, 100.0).unwrap(),
        Distribution::gamma(3.0, 2.0).unwrap(),
        Distribution::gamma(1.0, 1.0).unwrap(),
        Distribution::gamma(501.5, 50_000.0).unwrap(),
        Distribution::gamma(20.0, 0.5).unwrap(),
        Distribution::truncated_normal(0.0, 10.0, -2.0, 2.0).unwrap(),
        Distribution::truncated_normal(1.0, 0.5, 0.0, f64::INFINITY).unwrap(),
        Distribution::truncated_normal(0.0, 1.0, 3.0, 4.0).unwrap(),
        Distribution::truncated_normal(0.0, 1.0, f64::NEG_INFINITY, -1.0).unwrap(),
        Distribution::log_normal(0.0, 1.0).unwrap(),
        Distribution::log_normal(-5.0, 0.25).unwrap(),
        Distribution::uniform(-1.0, 3.0).unwrap(),
    ]
}

/// Integral of `exp(log_pdf)` over the support. Windows are clipped to the
/// support so any jump at a truncation point sits at an end.
pub fn total_mass(d: &Distribution) -> f64 {
    let dens = |x: f64| d.log_pdf(x).exp();
    match *d {
        Distribution::LogNormal { mu, sigma2 } => {
            // on the log scale the density is Gaussian
            let s = sigma2.sqrt();
            simpson(|y| dens(y.exp()) * y.exp(), mu - 40.0 * s, mu + 40.0 * s, 200_000)
        }
        Distribution::Gamma { shape, rate } if shape > 50.0 => {
            let (m, s) = (shape / rate, shape.sqrt() / rate);
            simpson(dens, (m - 30.0 * s).max(0.0), m + 30.0 * s, 200_000)
        }
        Distribution::Gamma { .. } => {
            // the shape-1 density has a finite jump at 0
            simpson(dens, 0.0, d.mean() + 60.0 * d.variance().sqrt(), 400_000)
        }
        _ => {
            let (lo, hi) = d.support();
            let (m, s) = (d.mean(), d.variance().sqrt());
            simpson(dens, lo.max(m - 60.0 * s), hi.min(m + 60.0 * s), 400_000)
        }
    }
}

/// Every variant integrates to one within 1e-6.
pub fn normalization_suite() -> Result<(), String> {
    for d in variants() {
        let mass = total_mass(&d);
        if (mass - 1.0).abs() >= 1e-6 {
            return Err(format!("{d:?}: mass {mass}"));
        }
    }
    Ok(())
}

/// Mean and variance of `k` draws.
pub fn empirical(k: usize, mut draw: impl FnMut() -> f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..k).map(|_| draw()).collect();
    let m = xs.iter().sum::<f64>() / k as f64;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
    (m, v)
}

/// Sample means and variances of 10^6 draws per variant within 5 standard
/// errors, and no draw outside the support.
pub fn moment_suite(seed: u64) -> Result<(), String> {
    let mut rng = RngHandle::new(seed);
    let k = 1_000_000;
    for d in variants() {
        let (lo, hi) = d.support();
        let mut outside = 0;
        let (m, v) = empirical(k, || {
            let x = d.sample(&mut rng);
            outside += (x < lo || x > hi) as usize;
            x
        });
        if outside > 0 {
            return Err(format!("{d:?}: {outside} draws outside the support"));
        }
        let se_m = (d.variance() / k as f64).sqrt();
        if (m - d.mean()).abs() >= 5.0 * se_m {
            return Err(format!("{d:?}: mean {m} vs {}", d.mean()));
        }
        // normal-theory se of a variance, widened 4x for skewed variants
        let se_v = 4.0 * d.variance() * (2.0 / k as f64).sqrt();
        if (v - d.variance()).abs() >= 5.0 * se_v {
            return Err(format!("{d:?}: variance {v} vs {}", d.variance()));
        }
    }
    Ok(())
}

/// Closed-form truncated moments against 10^6 rejection samples for 20
/// randomized parameter sets, within 5 standard errors.
pub fn truncated_moment_suite(pick_seed: u64, draw_seed: u64) -> Result<(), String> {
    let mut pick = RngHandle::new(pick_seed);
    let mut rng = RngHandle::new(draw_seed);
    for case in 0..20 {
        let mean = 6.0 * pick.uniform() - 3.0;
        let sd = 0.2 + 2.0 * pick.uniform();
        // windows keep at least ~5% of the mass so rejection is cheap
        let a = mean + sd * (3.0 * pick.uniform() - 2.0);
        let b = a + sd * (0.5 + 2.5 * pick.uniform());
        let (lo, hi) = if case % 5 == 0 { (a, f64::INFINITY) } else { (a, b) };
        let (m, v) = truncated_normal_moments(mean, sd * sd, lo, hi).map_err(|e| e.to_string())?;
        let k = 1_000_000;
        let mut xs = Vec::with_capacity(k);
        while xs.len() < k {
            let x = mean + sd * rng.standard_normal();
            if x >= lo && x <= hi {
                xs.push(x);
            }
        }
        let em = xs.iter().sum::<f64>() / k as f64;
        let ev = xs.iter().map(|x| (x - em).powi(2)).sum::<f64>() / (k - 1) as f64;
        if (em - m).abs() >= 5.0 * (v / k as f64).sqrt() {
            return Err(format!("case {case}: mean {em} vs {m}"));
        }
        // truncated laws have lighter tails than normal, so 2x the normal-theory se is generous
        if (ev - v).abs() >= 5.0 * 2.0 * v * (2.0 / k as f64).sqrt() {
            return Err(format!("case {case}: variance {ev} vs {v}"));
        }
    }
    Ok(())
}

/// Richardson-extrapolated central difference of `log_q` in coordinate `j`.
pub fn fd_score(f: &dyn FactorFamily, l: &[f64], z: &[f64], j: usize) -> f64 {
    let d = |h: f64| {
        let mut up = l.to_vec();
        let mut dn = l.to_vec();
        up[j] += h;
        dn[j] -= h;
        (f.log_q(&up, z) - f.log_q(&dn, z)) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn between(rng: &mut RngHandle, a: f64, b: f64) -> f64 {
    a + (b - a) * rng.uniform()
}

type Draw = dyn Fn(&mut RngHandle) -> (Vec<f64>, Vec<f64>);

fn worst_errors(f: &dyn FactorFamily, draw: &Draw, seed: u64) -> Vec<f64> {
    let mut rng = RngHandle::new(seed);
    let mut worst = vec![0.0f64; f.dim()];
    for _ in 0..50 {
        let (l, z) = draw(&mut rng);
        let mut score = vec![0.0; f.dim()];
        f.score(&l, &z, &mut score);
        for j in 0..f.dim() {
            let fd = fd_score(f, &l, &z, j);
            let rel = (score[j] - fd).abs() / fd.abs().max(score[j].abs()).max(1e-2);
            worst[j] = worst[j].max(rel);
        }
    }
    worst
}

pub const GRADIENT_NAMES: [&str; 8] = [
    "alpha_vartheta",
    "gamma_vartheta",
    "alpha_theta",
    "gamma_theta",
    "alpha_kappa",
    "gamma_kappa",
    "alpha_psi",
    "gamma_psi",
];

/// Worst relative error between each analytic score coordinate and finite
/// differences of `log q`, over 50 random interior points per factor.
pub fn gradient_worst_errors() -> Vec<f64> {
    let normal: &Draw = &|r| {
        let l = vec![between(r, -5.0, 10.0), between(r, -3.0, 3.0)];
        let z = vec![l[0] + between(r, -3.0, 3.0) * (0.5 * l[1]).exp()];
        (l, z)
    };
    let gamma: &Draw = &|r| (vec![between(r, -1.0, 3.0), between(r, -2.0, 2.0)], vec![between(r, 0.05, 5.0)]);
    let pair: &Draw = &|r| {
        let psi = between(r, 0.05, 1.95);
        let kappa = between(r, -0.95, 0.95) * psi;
        let l = vec![
            between(r, -1.0, 1.0),
            between(r, -2.0, 1.0),
            between(r, -1.0, 3.0),
            between(r, -2.0, 1.0),
        ];
        (l, vec![kappa, psi])
    };
    let mut worst = worst_errors(&NormalFactor, normal, 1);
    worst.extend(worst_errors(&GammaFactor, gamma, 2));
    worst.extend(worst_errors(&KappaPsiFactor, pair, 3));
    worst
}

pub fn model2_bbvi() -> Model2Bbvi {
    let y = model2::generate(100, Truth::default(), &mut RngHandle::new(43));
    Model2Bbvi::new(y).unwrap()
}

/// Share of gradient coordinates at the Model 2 start whose replicate
/// variance with control variates is at most that without. Both estimators
/// see the same draws in each replicate.
pub fn cv_variance_fraction(reps: usize, n: usize) -> f64 {
    let model = model2_bbvi();
    let lambda = model.initial_lambda();
    let cache = model.cache(&lambda);
    let mut with_cv: Vec<Vec<f64>> = Vec::new();
    let mut without: Vec<Vec<f64>> = Vec::new();
    for r in 0..reps {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..model.factor_count() {
            let log_c = |z: &[f64]| model.log_c(i, z, &lambda, &cache);
            let seed = 1000 * r as u64 + i as u64;
            let f = model.factor(i);
            a.extend(rb_gradient(f, &lambda[i], &log_c, n, true, &mut RngHandle::new(seed)).unwrap().gradient);
            b.extend(rb_gradient(f, &lambda[i], &log_c, n, false, &mut RngHandle::new(seed)).unwrap().gradient);
        }
        with_cv.push(a);
        without.push(b);
    }
    let var = |rows: &[Vec<f64>], j: usize| {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
        rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (rows.len() - 1) as f64
    };
    let d = with_cv[0].len();
    (0..d).filter(|&j| var(&with_cv, j) <= var(&without, j)).count() as f64 / d as f64
}
