//! Scalar probability distributions, special functions and the seeded RNG.
//!
//! Every law is stored with the parameterization used by the models: the
//! normal and its truncation by variance, the gamma by shape and **rate**
//! (density ∝ x^{shape-1} e^{-rate x}), the log-normal by the mean and
//! variance of its logarithm.

pub mod quad;
mod rng;
pub mod special;
mod truncated;

pub use rng::RngHandle;
pub use special::{digamma, ln_gamma, log_normal_cdf, log_normal_cdf_diff, normal_cdf, normal_pdf, normal_quantile};
pub use truncated::{sample_truncated_normal, truncated_normal_log_pdf, truncated_normal_moments, truncated_normal_quantile};

use crate::error::{Error, Result};
use rand_distr::Distribution as _;
pub use special::LN_SQRT_2PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Normal { mean: f64, variance: f64 },
    Gamma { shape: f64, rate: f64 },
    TruncatedNormal { mean: f64, variance: f64, lower: f64, upper: f64 },
    LogNormal { mu: f64, sigma2: f64 },
    Uniform { lower: f64, upper: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
    }
}

impl Distribution {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("variance", variance)?;
        Ok(Self::Normal { mean, variance })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    /// Bounds may be infinite; `lower < upper` is required.
    pub fn truncated_normal(mean: f64, variance: f64, lower: f64, upper: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("variance", variance)?;
        if !(lower < upper) {
            return Err(Error::InvalidParameter(format!("need lower < upper, got [{lower}, {upper}]")));
        }
        Ok(Self::TruncatedNormal { mean, variance, lower, upper })
    }

    pub fn log_normal(mu: f64, sigma2: f64) -> Result<Self> {
        finite("mu", mu)?;
        positive("sigma2", sigma2)?;
        Ok(Self::LogNormal { mu, sigma2 })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        finite("lower", lower)?;
        finite("upper", upper)?;
        if !(lower < upper) {
            return Err(Error::InvalidParameter(format!("need lower < upper, got [{lower}, {upper}]")));
        }
        Ok(Self::Uniform { lower, upper })
    }

    /// Closed support interval `(lower, upper)`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Gamma { .. } | Self::LogNormal { .. } => (0.0, f64::INFINITY),
            Self::TruncatedNormal { lower, upper, .. } | Self::Uniform { lower, upper } => (lower, upper),
        }
    }

    /// Natural-log density; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, variance } => {
                let d = x - mean;
                -0.5 * d * d / variance - 0.5 * variance.ln() - LN_SQRT_2PI
            }
            Self::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return if shape == 1.0 { rate.ln() } else { f64::INFINITY };
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Self::TruncatedNormal { mean, variance, lower, upper } => {
                truncated_normal_log_pdf(x, mean, variance, lower, upper)
            }
            Self::LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let d = lx - mu;
                -0.5 * d * d / sigma2 - 0.5 * sigma2.ln() - LN_SQRT_2PI - lx
            }
            Self::Uniform { lower, upper } => {
                if x < lower || x > upper {
                    f64::NEG_INFINITY
                } else {
                    -(upper - lower).ln()
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut RngHandle) -> f64 {
        match *self {
            Self::Normal { mean, variance } => mean + variance.sqrt() * rng.standard_normal(),
            Self::Gamma { shape, rate } => {
                let g = rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated at construction");
                g.sample(rng)
            }
            Self::TruncatedNormal { mean, variance, lower, upper } => {
                sample_truncated_normal(mean, variance, lower, upper, rng)
            }
            Self::LogNormal { mu, sigma2 } => (mu + sigma2.sqrt() * rng.standard_normal()).exp(),
            Self::Uniform { lower, upper } => lower + (upper - lower) * rng.uniform(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Gamma { shape, rate } => shape / rate,
            Self::TruncatedNormal { mean, variance, lower, upper } => {
                truncated_normal_moments(mean, variance, lower, upper).map(|m| m.0).unwrap_or(f64::NAN)
            }
            Self::LogNormal { mu, sigma2 } => (mu + 0.5 * sigma2).exp(),
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Normal { variance, .. } => variance,
            Self::Gamma { shape, rate } => shape / (rate * rate),
            Self::TruncatedNormal { mean, variance, lower, upper } => {
                truncated_normal_moments(mean, variance, lower, upper).map(|m| m.1).unwrap_or(f64::NAN)
            }
            Self::LogNormal { mu, sigma2 } => (sigma2.exp() - 1.0) * (2.0 * mu + sigma2).exp(),
            Self::Uniform { lower, upper } => (upper - lower).powi(2) / 12.0,
        }
    }

    /// E[ln x] where it has a closed form (gamma and log-normal laws).
    pub fn mean_log(&self) -> Option<f64> {
        match *self {
            Self::Gamma { shape, rate } => Some(special::digamma(shape) - rate.ln()),
            Self::LogNormal { mu, .. } => Some(mu),
            _ => None,
        }
    }

    /// Differential entropy where it has a closed form.
    pub fn entropy(&self) -> Option<f64> {
        match *self {
            Self::Normal { variance, .. } => Some(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln()),
            Self::Gamma { shape, rate } => {
                Some(shape - rate.ln() + ln_gamma(shape) + (1.0 - shape) * special::digamma(shape))
            }
            Self::Uniform { lower, upper } => Some((upper - lower).ln()),
            _ => None,
        }
    }
}
