//! Normal model with hard constraints:
//! `y_j ~ N(vartheta + kappa_j, 1/theta)`, `vartheta ~ N(0, 10)`,
//! `kappa_j | psi_j ~ TN(0, 10, -psi_j, psi_j)`,
//! `psi_j ~ TN(0.05, 10, 0, 2)`, `theta ~ Gamma(1, 1)`,
//! so every admissible state has `|kappa_j| < psi_j < 2`.

mod bbvi;
mod mc_cavi;
mod mcmc;

pub use bbvi::{KappaPsiFactor, Model2Bbvi};
pub use mc_cavi::Model2;
pub use mcmc::{mcmc_conditionals, mcmc_initial_chain, validate_mcmc_state, McmcLayout};

use crate::error::{Error, Result};
use crate::stats::{log_normal_cdf_diff, Distribution, RngHandle, LN_SQRT_2PI};

/// Prior variance shared by `vartheta`, `kappa_j` and `psi_j`.
pub const PRIOR_VAR: f64 = 10.0;
/// Prior location of `psi_j`.
pub const PSI_LOC: f64 = 0.05;
/// Upper bound of `psi_j`.
pub const PSI_MAX: f64 = 2.0;

/// Generating parameters of the simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub vartheta: f64,
    pub theta: f64,
    pub amplitude: f64,
}

impl Default for Truth {
    fn default() -> Self {
        Self {
            vartheta: 6.0,
            theta: 3.0,
            amplitude: 1.5,
        }
    }
}

impl Truth {
    /// `amplitude * sin(-2 pi + 4 pi (j - 1) / n)` for 1-based `j`.
    pub fn kappa(&self, j: usize, n: usize) -> f64 {
        let t = -2.0 * std::f64::consts::PI + 4.0 * std::f64::consts::PI * (j as f64 - 1.0) / n as f64;
        self.amplitude * t.sin()
    }

    /// Noise-free curve `vartheta + kappa_j`.
    pub fn curve(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|j| self.vartheta + self.kappa(j, n)).collect()
    }
}

/// Simulates `n` observations from the generating process.
pub fn generate(n: usize, truth: Truth, rng: &mut RngHandle) -> Vec<f64> {
    let sd = truth.theta.recip().sqrt();
    truth
        .curve(n)
        .into_iter()
        .map(|m| m + sd * rng.standard_normal())
        .collect()
}

pub(crate) fn check_data(y: &[f64]) -> Result<()> {
    if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("data must be non-empty and finite".into()));
    }
    Ok(())
}

/// `vartheta | rest ~ N(S theta / (1/10 + n theta), 1 / (1/10 + n theta))`
/// with `S = sum_j (y_j - kappa_j)`; expectations may replace the values.
pub fn vartheta_conditional(resid_sum: f64, n: usize, theta: f64) -> Distribution {
    let prec = 1.0 / PRIOR_VAR + n as f64 * theta;
    Distribution::Normal {
        mean: resid_sum * theta / prec,
        variance: 1.0 / prec,
    }
}

/// `theta | rest ~ Gamma(1 + n/2, 1 + SS/2)` with
/// `SS = sum_j (y_j - vartheta - kappa_j)^2`.
pub fn theta_conditional(n: usize, ss: f64) -> Distribution {
    Distribution::Gamma {
        shape: 1.0 + n as f64 / 2.0,
        rate: 1.0 + ss / 2.0,
    }
}

/// `kappa_j | rest ~ TN((y_j - vartheta) theta / (1/10 + theta), 1 / (1/10 + theta), -psi, psi)`.
pub fn kappa_conditional(y: f64, vartheta: f64, theta: f64, psi: f64) -> Distribution {
    let prec = 1.0 / PRIOR_VAR + theta;
    Distribution::TruncatedNormal {
        mean: (y - vartheta) * theta / prec,
        variance: 1.0 / prec,
        lower: -psi,
        upper: psi,
    }
}

/// Whether `(kappa, psi)` lies in the admissible set.
pub fn admissible(kappa: f64, psi: f64) -> bool {
    kappa.abs() < psi && psi < PSI_MAX
}

/// Log of the unnormalized `psi_j` conditional given `kappa_j`:
/// `log phi((psi - 0.05)/sqrt(10)) - log[Phi(psi/sqrt(10)) - Phi(-psi/sqrt(10))]`
/// on `|kappa| < psi < 2`.
pub fn psi_log_conditional(kappa: f64, psi: f64) -> f64 {
    if !admissible(kappa, psi) {
        return f64::NEG_INFINITY;
    }
    let s = PRIOR_VAR.sqrt();
    let u = (psi - PSI_LOC) / s;
    -LN_SQRT_2PI - 0.5 * u * u - log_normal_cdf_diff(-psi / s, psi / s)
}
