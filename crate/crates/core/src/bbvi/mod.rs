//! Black-box variational inference with Rao-Blackwellized score-function
//! gradients, control variates and AdaGrad step sizes.

mod factors;

pub use factors::{truncated_normal_score, FactorFamily, GammaFactor, NormalFactor, TruncatedNormalFactor};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::stats::RngHandle;
use crate::vi::SweepTrace;

/// Guard added under the AdaGrad square root.
pub const ADAGRAD_EPS: f64 = 1e-10;
/// Any parameter beyond this magnitude aborts a run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Diagonal AdaGrad accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    pub g: Vec<f64>,
    pub eta: f64,
}

impl AdaGradState {
    pub fn new(dim: usize, eta: f64) -> Self {
        Self { g: vec![0.0; dim], eta }
    }

    /// `G += grad^2`, then `lambda += eta * grad / sqrt(G + eps)`.
    pub fn step(&mut self, lambda: &mut [f64], grad: &[f64]) {
        assert_eq!(lambda.len(), grad.len());
        assert_eq!(self.g.len(), grad.len());
        for ((l, g), acc) in lambda.iter_mut().zip(grad).zip(self.g.iter_mut()) {
            *acc += g * g;
            *l += self.eta * g / (*acc + ADAGRAD_EPS).sqrt();
        }
    }
}

/// Functional form of [`AdaGradState::step`].
pub fn adagrad_step(lambda: &[f64], grad: &[f64], ada: &AdaGradState) -> (Vec<f64>, AdaGradState) {
    let mut l = lambda.to_vec();
    let mut a = ada.clone();
    a.step(&mut l, grad);
    (l, a)
}

fn sample_cov(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0)
}

/// `sum_j Cov(f_j, g_j) / sum_j Var(g_j)` over the parameter coordinates
/// `j`. `f[j]` and `g[j]` hold the samples of coordinate `j`.
pub fn control_variate_coeff(f: &[Vec<f64>], g: &[Vec<f64>]) -> Result<f64> {
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::InvalidParameter("f and g need the same non-zero coordinate count".into()));
    }
    let n = g[0].len();
    if n < 2 || f.iter().chain(g).any(|c| c.len() != n) {
        return Err(Error::InvalidParameter("control variates need at least two samples per coordinate".into()));
    }
    let num: f64 = f.iter().zip(g).map(|(fj, gj)| sample_cov(fj, gj)).sum();
    let den: f64 = g.iter().map(|gj| sample_cov(gj, gj)).sum();
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("score samples have zero variance".into()));
    }
    Ok(num / den)
}

/// Gradient estimate for one factor together with the control-variate
/// coefficient that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub cv_coeff: f64,
}

/// Rao-Blackwellized score-function gradient for one factor:
/// `mean_n score(z_n) * (log_c(z_n) - log_q(z_n) - a)` with `z_n ~ q`,
/// where `a` is the fitted control-variate coefficient when `control_variate`
/// is set and 0 otherwise.
pub fn rb_gradient(
    factor: &dyn FactorFamily,
    lambda: &[f64],
    log_c: &dyn Fn(&[f64]) -> f64,
    n: usize,
    control_variate: bool,
    rng: &mut RngHandle,
) -> Result<GradientEstimate> {
    if n < 2 {
        return Err(Error::InvalidParameter("gradient estimate needs N >= 2".into()));
    }
    let d = factor.dim();
    let mut g = vec![Vec::with_capacity(n); d];
    let mut f = vec![Vec::with_capacity(n); d];
    let mut score = vec![0.0; d];
    for _ in 0..n {
        let z = factor.sample(lambda, rng);
        factor.score(lambda, &z, &mut score);
        let w = log_c(&z) - factor.log_q(lambda, &z);
        for j in 0..d {
            g[j].push(score[j]);
            f[j].push(score[j] * w);
        }
    }
    let a = if control_variate {
        match control_variate_coeff(&f, &g) {
            Ok(a) if a.is_finite() => a,
            _ => {
                log::warn!("degenerate score variance; control variate disabled for this factor");
                0.0
            }
        }
    } else {
        0.0
    };
    let gradient = (0..d)
        .map(|j| f[j].iter().zip(&g[j]).map(|(fv, gv)| fv - a * gv).sum::<f64>() / n as f64)
        .collect();
    Ok(GradientEstimate { gradient, cv_coeff: a })
}

/// A model written as a product of BBVI factors.
///
/// `log_c(i, z_i, lambda, cache)` is the expectation of the log joint over
/// all factors except `i`, keeping only terms that involve `z_i`. The cache is
/// rebuilt once per iteration from the current parameters.
pub trait BbviModel {
    type Cache;

    fn factor_count(&self) -> usize;

    fn factor(&self, i: usize) -> &dyn FactorFamily;

    fn factor_name(&self, i: usize) -> String;

    /// Prior-matching default start.
    fn initial_lambda(&self) -> Vec<Vec<f64>>;

    fn cache(&self, lambda: &[Vec<f64>]) -> Self::Cache;

    fn log_c(&self, i: usize, z: &[f64], lambda: &[Vec<f64>], cache: &Self::Cache) -> f64;

    /// Summary statistics recorded per iteration.
    fn monitored(&self, lambda: &[Vec<f64>]) -> Vec<(String, f64)>;
}

/// Options for [`run_bbvi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbviOptions {
    pub iters: usize,
    pub samples: usize,
    pub eta: f64,
    pub control_variate: bool,
}

impl Default for BbviOptions {
    fn default() -> Self {
        Self {
            iters: 100,
            samples: 10,
            eta: 0.5,
            control_variate: true,
        }
    }
}

/// Output of a BBVI run: final parameters, the full parameter trajectory
/// (one column per parameter) and the monitored-statistic trace.
#[derive(Debug, Clone)]
pub struct BbviOutcome {
    pub lambda: Vec<Vec<f64>>,
    pub trajectory: SweepTrace,
    pub trace: SweepTrace,
}

/// Column names `"<factor>.<parameter>"` for the trajectory CSV.
pub fn parameter_columns<M: BbviModel>(model: &M) -> Vec<String> {
    (0..model.factor_count())
        .flat_map(|i| {
            let name = model.factor_name(i);
            model
                .factor(i)
                .parameter_names()
                .into_iter()
                .map(move |p| format!("{name}.{p}"))
        })
        .collect()
}

/// Joint gradient over all factors at fixed `lambda`.
pub fn full_gradient<M: BbviModel>(
    model: &M,
    lambda: &[Vec<f64>],
    samples: usize,
    control_variate: bool,
    rng: &mut RngHandle,
) -> Result<Vec<Vec<f64>>> {
    let cache = model.cache(lambda);
    (0..model.factor_count())
        .map(|i| {
            let log_c = |z: &[f64]| model.log_c(i, z, lambda, &cache);
            rb_gradient(model.factor(i), &lambda[i], &log_c, samples, control_variate, rng).map(|g| g.gradient)
        })
        .collect()
}

/// Iterates sampling, per-factor gradient estimation and a joint AdaGrad
/// step. Parameters leaving `[-1e6, 1e6]` abort with the trace attached.
pub fn run_bbvi<M: BbviModel>(
    model: &M,
    init: Vec<Vec<f64>>,
    options: BbviOptions,
    rng: &mut RngHandle,
) -> Result<BbviOutcome> {
    run_bbvi_until(model, init, options, rng, |_| false)
}

/// As [`run_bbvi`], also stopping once `stop(elapsed_secs)` holds. The check
/// runs between iterations only.
pub fn run_bbvi_until<M: BbviModel>(
    model: &M,
    init: Vec<Vec<f64>>,
    options: BbviOptions,
    rng: &mut RngHandle,
    stop: impl Fn(f64) -> bool,
) -> Result<BbviOutcome> {
    if init.len() != model.factor_count() {
        return Err(Error::InvalidParameter("one parameter vector per factor".into()));
    }
    for (i, l) in init.iter().enumerate() {
        if l.len() != model.factor(i).dim() {
            return Err(Error::InvalidParameter(format!("factor {i} expects {} parameters", model.factor(i).dim())));
        }
    }
    let start = Instant::now();
    let columns = parameter_columns(model);
    let mut lambda = init;
    let mut ada = AdaGradState::new(columns.len(), options.eta);
    let mut trajectory = SweepTrace::new(columns.clone());
    let mut trace = SweepTrace::default();
    for k in 1..=options.iters {
        if stop(start.elapsed().as_secs_f64()) {
            break;
        }
        let grads = match full_gradient(model, &lambda, options.samples, options.control_variate, rng) {
            Ok(g) => g,
            Err(e) => return Err(e.with_trace(trace)),
        };
        let mut flat: Vec<f64> = lambda.iter().flatten().copied().collect();
        let flat_grad: Vec<f64> = grads.into_iter().flatten().collect();
        ada.step(&mut flat, &flat_grad);
        if let Some(j) = flat.iter().position(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence {
                iteration: k,
                detail: format!("parameter {} = {}", columns[j], flat[j]),
            }
            .with_trace(trace));
        }
        let mut offset = 0;
        for l in lambda.iter_mut() {
            let d = l.len();
            l.copy_from_slice(&flat[offset..offset + d]);
            offset += d;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let row: Vec<(String, f64)> = columns.iter().cloned().zip(flat.iter().copied()).collect();
        trajectory.push(&row, None, elapsed);
        trace.push(&model.monitored(&lambda), None, elapsed);
    }
    Ok(BbviOutcome {
        lambda,
        trajectory,
        trace,
    })
}

/// Nested Monte Carlo estimate of `log c_i(z_i)`: the average of
/// `log_p_local(z_i, others)` over `m` draws of the other blocks from q.
pub fn nested_mc_log_c(
    z: &[f64],
    m: usize,
    rng: &mut RngHandle,
    mut sample_others: impl FnMut(&mut RngHandle) -> Vec<f64>,
    log_p_local: impl Fn(&[f64], &[f64]) -> f64,
) -> f64 {
    let mut sum = 0.0;
    for _ in 0..m {
        let others = sample_others(rng);
        sum += log_p_local(z, &others);
    }
    sum / m.max(1) as f64
}
