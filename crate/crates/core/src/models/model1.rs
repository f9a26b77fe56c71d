//! Semi-conjugate normal model: `x_j ~ N(mu, 1/tau)`, `mu ~ N(0, 1/tau)`,
//! `tau ~ Gamma(1, 1)`, with mean-field factors `q(tau) q(mu)`.
//!
//! The location parameter is called `vartheta` in block and moment names;
//! `theta` is reserved for the monitored statistic `(1 + n) E(tau)`.

use crate::error::{Error, Result};
use crate::mc_cavi::MwgKernel;
use crate::mcmc::{ChainState, Conditionals, ProposalKind, Transform, UpdateRule};
use crate::stats::{Distribution, RngHandle, LN_SQRT_2PI};
use crate::vi::{BlockState, InnerKernel, Moments, ModelSpec, VariationalState};

pub const TAU: usize = 0;
pub const VARTHETA: usize = 1;

/// How the `tau` block is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauUpdate {
    #[default]
    ClosedForm,
    /// `E(tau)` estimated from a log-scale random-walk chain targeting the
    /// exact `q(tau)`.
    MonteCarlo,
}

/// Draws `n` points from `N(10, 100)`.
pub fn generate(n: usize, rng: &mut RngHandle) -> Vec<f64> {
    (0..n).map(|_| 10.0 + 10.0 * rng.standard_normal()).collect()
}

#[derive(Debug, Clone)]
pub struct Model1 {
    data: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    pub tau_update: TauUpdate,
    /// Starting value and proposal scale of the `tau` inner chain.
    pub chain_start: (f64, f64),
}

impl Model1 {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() || data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data must be non-empty and finite".into()));
        }
        let sum = data.iter().sum();
        let sum_sq = data.iter().map(|v| v * v).sum();
        Ok(Self {
            data,
            sum,
            sum_sq,
            tau_update: TauUpdate::ClosedForm,
            chain_start: (1.0, 0.5),
        })
    }

    pub fn with_tau_update(mut self, mode: TauUpdate) -> Self {
        self.tau_update = mode;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn n(&self) -> f64 {
        self.data.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n()
    }

    /// `(n + 3) / 2`.
    pub fn tau_shape(&self) -> f64 {
        (self.n() + 3.0) / 2.0
    }

    /// `1 + [(1+n) E(mu^2) - 2 n xbar E(mu) + sum x^2] / 2`.
    pub fn zeta(&self, e_mu: f64, e_mu2: f64) -> f64 {
        1.0 + ((1.0 + self.n()) * e_mu2 - 2.0 * self.sum * e_mu + self.sum_sq) / 2.0
    }

    fn zeta_from(&self, state: &VariationalState) -> Result<f64> {
        let b = &state.blocks[VARTHETA].moments;
        let z = self.zeta(b.get("E(vartheta)")?, b.get("E(vartheta^2)")?);
        if !(z > 0.0) {
            return Err(Error::InvalidParameter(format!("zeta = {z} is not positive")));
        }
        Ok(z)
    }

    fn tau_block(&self, q: Distribution, zeta: f64, e_tau: f64) -> BlockState {
        let moments = Moments::new()
            .with("E(tau)", e_tau)
            .with("E(log tau)", q.mean_log().unwrap_or(f64::NAN))
            .with("zeta", zeta);
        BlockState::from_factor(q, moments)
    }

    /// The paper-style start: `E(mu) = E(mu^2) = 0`, nothing cached for tau.
    pub fn default_init(&self) -> VariationalState {
        let mu = Moments::new().with("E(vartheta)", 0.0).with("E(vartheta^2)", 0.0);
        VariationalState::new(vec![BlockState::default(), BlockState::from_moments(mu)])
    }

    /// Both factors as distributions, if present.
    fn factors(&self, state: &VariationalState) -> Result<(f64, f64, f64, f64)> {
        let tau = state.blocks[TAU].factor;
        let mu = state.blocks[VARTHETA].factor;
        match (tau, mu) {
            (Some(Distribution::Gamma { shape, rate }), Some(Distribution::Normal { mean, variance })) => {
                Ok((shape, rate, mean, variance))
            }
            _ => Err(Error::Config("ELBO needs a gamma tau factor and a normal vartheta factor".into())),
        }
    }
}

impl ModelSpec for Model1 {
    fn block_names(&self) -> Vec<String> {
        vec!["tau".into(), "vartheta".into()]
    }

    fn is_closed_form(&self, i: usize) -> bool {
        i == VARTHETA || self.tau_update == TauUpdate::ClosedForm
    }

    fn initial_state(&self) -> VariationalState {
        self.default_init()
    }

    fn cavi_update(&self, i: usize, state: &VariationalState) -> Result<BlockState> {
        match i {
            TAU => {
                let zeta = self.zeta_from(state)?;
                let q = Distribution::gamma(self.tau_shape(), zeta)?;
                Ok(self.tau_block(q, zeta, q.mean()))
            }
            VARTHETA => {
                let e_tau = state.moment(TAU, "E(tau)")?;
                let n = self.n();
                let q = Distribution::normal(self.sum / (1.0 + n), 1.0 / ((1.0 + n) * e_tau))?;
                let moments = Moments::new()
                    .with("E(vartheta)", q.mean())
                    .with("E(vartheta^2)", q.mean().powi(2) + q.variance());
                Ok(BlockState::from_factor(q, moments))
            }
            _ => Err(Error::Config(format!("model 1 has no block {i}"))),
        }
    }

    fn mc_kernel<'a>(&'a self, i: usize, state: &VariationalState) -> Result<Box<dyn InnerKernel + 'a>> {
        if i != TAU || self.tau_update != TauUpdate::MonteCarlo {
            return Err(Error::Config(format!("block {i} is not updated by Monte Carlo")));
        }
        let shape = self.tau_shape();
        let zeta = self.zeta_from(state)?;
        let log_target = move |_: &[f64], t: f64| {
            if t > 0.0 {
                (shape - 1.0) * t.ln() - zeta * t
            } else {
                f64::NEG_INFINITY
            }
        };
        let rules = vec![UpdateRule::metropolis(
            ProposalKind::RandomWalk {
                transform: Transform::Log,
            },
            log_target,
        )];
        let kernel = MwgKernel::new(Conditionals::new(rules).with_constraint(|v| {
            if v[0] > 0.0 {
                Ok(())
            } else {
                Err(format!("tau = {} is not positive", v[0]))
            }
        }))
        .statistic("E(tau)", |v| v[0]);
        Ok(Box::new(kernel))
    }

    fn init_chain(&self, i: usize) -> Result<ChainState> {
        if i != TAU {
            return Err(Error::Config(format!("block {i} has no inner chain")));
        }
        Ok(ChainState::new(vec![self.chain_start.0], self.chain_start.1))
    }

    /// Keeps the Monte Carlo `E(tau)` and records a moment-matched gamma
    /// factor with the exact shape so the ELBO stays evaluable.
    fn absorb(&self, i: usize, state: &VariationalState, estimates: Moments) -> Result<BlockState> {
        if i != TAU {
            return Err(Error::Config(format!("block {i} has no inner chain")));
        }
        let e_tau = estimates.get("E(tau)")?;
        let zeta = self.zeta_from(state)?;
        let shape = self.tau_shape();
        let q = Distribution::gamma(shape, shape / e_tau)?;
        Ok(self.tau_block(q, zeta, e_tau))
    }

    fn monitored(&self, state: &VariationalState) -> Result<Vec<(String, f64)>> {
        let zeta = match state.blocks[TAU].moments.get("zeta") {
            Ok(z) => z,
            Err(_) => self.zeta_from(state)?,
        };
        let e_tau = state.moment(TAU, "E(tau)")?;
        Ok(vec![
            ("zeta".into(), zeta),
            ("theta".into(), (1.0 + self.n()) * e_tau),
            ("E(tau)".into(), e_tau),
            ("E(vartheta)".into(), state.moment(VARTHETA, "E(vartheta)")?),
        ])
    }

    fn elbo_analytic(&self, state: &VariationalState) -> Result<f64> {
        let (a, b, m, v) = self.factors(state)?;
        let n = self.n();
        let e_tau = a / b;
        let e_log_tau = crate::stats::digamma(a) - b.ln();
        let e_mu2 = m * m + v;
        let lik = n * (0.5 * e_log_tau - LN_SQRT_2PI) - 0.5 * e_tau * (self.sum_sq - 2.0 * self.sum * m + n * e_mu2);
        let prior_mu = 0.5 * e_log_tau - LN_SQRT_2PI - 0.5 * e_tau * e_mu2;
        let prior_tau = -e_tau;
        let h_tau = Distribution::Gamma { shape: a, rate: b }.entropy().unwrap_or(f64::NAN);
        let h_mu = Distribution::Normal { mean: m, variance: v }.entropy().unwrap_or(f64::NAN);
        Ok(lik + prior_mu + prior_tau + h_tau + h_mu)
    }

    /// `z = (tau, vartheta)`.
    fn sample_q(&self, state: &VariationalState, rng: &mut RngHandle) -> Result<Vec<f64>> {
        let (a, b, m, v) = self.factors(state)?;
        let tau = Distribution::Gamma { shape: a, rate: b }.sample(rng);
        let mu = m + v.sqrt() * rng.standard_normal();
        Ok(vec![tau, mu])
    }

    fn log_q(&self, state: &VariationalState, z: &[f64]) -> Result<f64> {
        let (a, b, m, v) = self.factors(state)?;
        Ok(Distribution::Gamma { shape: a, rate: b }.log_pdf(z[0])
            + Distribution::Normal { mean: m, variance: v }.log_pdf(z[1]))
    }

    fn log_joint(&self, z: &[f64]) -> Result<f64> {
        let (tau, mu) = (z[0], z[1]);
        if !(tau > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let n = self.n();
        let ss = self.sum_sq - 2.0 * mu * self.sum + n * mu * mu;
        Ok((n + 1.0) * (0.5 * tau.ln() - LN_SQRT_2PI) - 0.5 * tau * (ss + mu * mu) - tau)
    }
}
