use crate::stats::special::LN_SQRT_2PI;
use crate::stats::{digamma, ln_gamma, log_normal_cdf_diff, sample_truncated_normal, RngHandle};

/// Parametric variational factor with its score function.
pub trait FactorFamily {
    /// Length of the parameter vector.
    fn dim(&self) -> usize;

    /// Length of a draw.
    fn sample_dim(&self) -> usize {
        1
    }

    fn parameter_names(&self) -> Vec<String>;

    fn sample(&self, lambda: &[f64], rng: &mut RngHandle) -> Vec<f64>;

    fn log_q(&self, lambda: &[f64], z: &[f64]) -> f64;

    /// Gradient of `log_q` with respect to `lambda`, written into `out`.
    fn score(&self, lambda: &[f64], z: &[f64], out: &mut [f64]);
}

/// `N(alpha, exp(gamma))`: `gamma` is the log variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalFactor;

impl FactorFamily for NormalFactor {
    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["alpha".into(), "gamma".into()]
    }

    fn sample(&self, l: &[f64], rng: &mut RngHandle) -> Vec<f64> {
        vec![l[0] + (0.5 * l[1]).exp() * rng.standard_normal()]
    }

    fn log_q(&self, l: &[f64], z: &[f64]) -> f64 {
        -LN_SQRT_2PI - 0.5 * l[1] - 0.5 * (z[0] - l[0]).powi(2) * (-l[1]).exp()
    }

    fn score(&self, l: &[f64], z: &[f64], out: &mut [f64]) {
        let prec = (-l[1]).exp();
        let d = z[0] - l[0];
        out[0] = d * prec;
        out[1] = -0.5 + 0.5 * d * d * prec;
    }
}

/// `Gamma(shape = exp(alpha), rate = exp(gamma))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GammaFactor;

impl FactorFamily for GammaFactor {
    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["alpha".into(), "gamma".into()]
    }

    fn sample(&self, l: &[f64], rng: &mut RngHandle) -> Vec<f64> {
        let d = crate::stats::Distribution::Gamma {
            shape: l[0].exp(),
            rate: l[1].exp(),
        };
        vec![d.sample(rng).max(f64::MIN_POSITIVE)]
    }

    fn log_q(&self, l: &[f64], z: &[f64]) -> f64 {
        let shape = l[0].exp();
        shape * l[1] - ln_gamma(shape) + (shape - 1.0) * z[0].ln() - l[1].exp() * z[0]
    }

    fn score(&self, l: &[f64], z: &[f64], out: &mut [f64]) {
        let shape = l[0].exp();
        out[0] = shape * (l[1] - digamma(shape) + z[0].ln());
        out[1] = shape - l[1].exp() * z[0];
    }
}

/// Score-related pieces of `TN(alpha, exp(2 gamma), lower, upper)`.
///
/// Returns `(log q(z), d/d alpha, d/d gamma)`.
pub fn truncated_normal_score(alpha: f64, gamma: f64, lower: f64, upper: f64, z: f64) -> (f64, f64, f64) {
    let sigma = gamma.exp();
    let a = (lower - alpha) / sigma;
    let b = (upper - alpha) / sigma;
    let log_z = log_normal_cdf_diff(a, b);
    let u = (z - alpha) / sigma;
    let log_q = -LN_SQRT_2PI - gamma - 0.5 * u * u - log_z;
    // phi(x)/Z and x*phi(x)/Z in log space so far-tail bounds stay finite
    let ratio = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            (-LN_SQRT_2PI - 0.5 * x * x - log_z).exp()
        }
    };
    let (rb, ra) = (ratio(b), ratio(a));
    let xa = if a.is_infinite() { 0.0 } else { a * ra };
    let xb = if b.is_infinite() { 0.0 } else { b * rb };
    let d_alpha = u / sigma + (rb - ra) / sigma;
    let d_gamma = -1.0 + u * u + (xb - xa);
    (log_q, d_alpha, d_gamma)
}

/// `TN(alpha, exp(2 gamma), lower, upper)` with fixed bounds: `gamma` is the
/// log standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNormalFactor {
    pub lower: f64,
    pub upper: f64,
}

impl FactorFamily for TruncatedNormalFactor {
    fn dim(&self) -> usize {
        2
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["alpha".into(), "gamma".into()]
    }

    fn sample(&self, l: &[f64], rng: &mut RngHandle) -> Vec<f64> {
        let sd = l[1].exp();
        vec![sample_truncated_normal(l[0], sd * sd, self.lower, self.upper, rng)]
    }

    fn log_q(&self, l: &[f64], z: &[f64]) -> f64 {
        truncated_normal_score(l[0], l[1], self.lower, self.upper, z[0]).0
    }

    fn score(&self, l: &[f64], z: &[f64], out: &mut [f64]) {
        let (_, da, dg) = truncated_normal_score(l[0], l[1], self.lower, self.upper, z[0]);
        out[0] = da;
        out[1] = dg;
    }
}
