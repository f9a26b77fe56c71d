use super::{
    check_data, kappa_conditional, psi_log_conditional, theta_conditional, vartheta_conditional, PSI_MAX,
};
use crate::error::{Error, Result};
use crate::mc_cavi::MwgKernel;
use crate::mcmc::{ChainState, Conditionals, ProposalKind, UpdateRule};
use crate::vi::{BlockState, InnerKernel, Moments, ModelSpec, VariationalState};

/// MC-CAVI form of the constrained model with factors
/// `q(vartheta) q(theta) prod_j q(kappa_j, psi_j)`.
///
/// Blocks `0..n` are the `(kappa_j, psi_j)` pairs, each updated by an inner
/// Metropolis-within-Gibbs chain; block `n` is `vartheta` and block `n + 1`
/// is `theta`, both closed form. One sweep visits them in that order.
#[derive(Debug, Clone)]
pub struct Model2 {
    y: Vec<f64>,
}

impl Model2 {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        check_data(&y)?;
        Ok(Self { y })
    }

    pub fn data(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn vartheta_block(&self) -> usize {
        self.n()
    }

    pub fn theta_block(&self) -> usize {
        self.n() + 1
    }

    /// Fitted curve `E(vartheta) + E(kappa_j)`.
    pub fn fitted_curve(&self, state: &VariationalState) -> Result<Vec<f64>> {
        let mu = state.moment(self.vartheta_block(), "E(vartheta)")?;
        (0..self.n())
            .map(|j| state.moment(j, "E(kappa)").map(|k| mu + k))
            .collect()
    }
}

impl ModelSpec for Model2 {
    fn block_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n()).map(|j| format!("kappa_psi[{j}]")).collect();
        names.push("vartheta".into());
        names.push("theta".into());
        names
    }

    fn is_closed_form(&self, i: usize) -> bool {
        i >= self.n()
    }

    /// `E(theta) = 1`, `E(vartheta) = 4`, `E(vartheta^2) = 17`; pair blocks
    /// start from the chain state `(0, 1)`.
    fn initial_state(&self) -> VariationalState {
        let mut blocks: Vec<BlockState> = (0..self.n())
            .map(|_| {
                BlockState::from_moments(
                    Moments::new()
                        .with("E(kappa)", 0.0)
                        .with("E(kappa^2)", 0.0)
                        .with("E(psi)", 1.0),
                )
            })
            .collect();
        blocks.push(BlockState::from_moments(
            Moments::new().with("E(vartheta)", 4.0).with("E(vartheta^2)", 17.0),
        ));
        blocks.push(BlockState::from_moments(Moments::new().with("E(theta)", 1.0)));
        VariationalState::new(blocks)
    }

    fn cavi_update(&self, i: usize, state: &VariationalState) -> Result<BlockState> {
        let n = self.n();
        if i == self.vartheta_block() {
            let e_theta = state.moment(self.theta_block(), "E(theta)")?;
            let mut s = 0.0;
            for j in 0..n {
                s += self.y[j] - state.moment(j, "E(kappa)")?;
            }
            let q = vartheta_conditional(s, n, e_theta);
            let m = Moments::new()
                .with("E(vartheta)", q.mean())
                .with("E(vartheta^2)", q.mean().powi(2) + q.variance());
            Ok(BlockState::from_factor(q, m))
        } else if i == self.theta_block() {
            let b = &state.blocks[self.vartheta_block()].moments;
            let (mu, mu2) = (b.get("E(vartheta)")?, b.get("E(vartheta^2)")?);
            let mut ss = 0.0;
            for j in 0..n {
                let (k, k2) = (state.moment(j, "E(kappa)")?, state.moment(j, "E(kappa^2)")?);
                let y = self.y[j];
                ss += y * y + mu2 + k2 - 2.0 * y * mu - 2.0 * y * k + 2.0 * mu * k;
            }
            let q = theta_conditional(n, ss);
            let m = Moments::new()
                .with("E(theta)", q.mean())
                .with("E(log theta)", q.mean_log().unwrap_or(f64::NAN));
            Ok(BlockState::from_factor(q, m))
        } else {
            Err(Error::Config(format!("block {i} is updated by Monte Carlo")))
        }
    }

    fn mc_kernel<'a>(&'a self, i: usize, state: &VariationalState) -> Result<Box<dyn InnerKernel + 'a>> {
        if i >= self.n() {
            return Err(Error::Config(format!("block {i} is closed form")));
        }
        let e_theta = state.moment(self.theta_block(), "E(theta)")?;
        let e_mu = state.moment(self.vartheta_block(), "E(vartheta)")?;
        let y = self.y[i];
        let rules = vec![
            UpdateRule::gibbs(move |v: &[f64], rng| kappa_conditional(y, e_mu, e_theta, v[1]).sample(rng)),
            UpdateRule::metropolis(
                ProposalKind::IndependentUniform {
                    lower: 0.0,
                    upper: PSI_MAX,
                },
                |v: &[f64], psi| psi_log_conditional(v[0], psi),
            ),
        ];
        let conds = Conditionals::new(rules).with_constraint(|v| {
            if super::admissible(v[0], v[1]) {
                Ok(())
            } else {
                Err(format!("kappa {}, psi {} violates |kappa| < psi < {PSI_MAX}", v[0], v[1]))
            }
        });
        Ok(Box::new(
            MwgKernel::new(conds)
                .statistic("E(kappa)", |v| v[0])
                .statistic("E(kappa^2)", |v| v[0] * v[0])
                .statistic("E(psi)", |v| v[1]),
        ))
    }

    fn init_chain(&self, i: usize) -> Result<ChainState> {
        if i >= self.n() {
            return Err(Error::Config(format!("block {i} has no inner chain")));
        }
        Ok(ChainState::new(vec![0.0, 1.0], 1.0))
    }

    fn absorb(&self, i: usize, _state: &VariationalState, estimates: Moments) -> Result<BlockState> {
        if i >= self.n() {
            return Err(Error::Config(format!("block {i} has no inner chain")));
        }
        Ok(BlockState::from_moments(estimates))
    }

    fn monitored(&self, state: &VariationalState) -> Result<Vec<(String, f64)>> {
        Ok(vec![
            ("vartheta".into(), state.moment(self.vartheta_block(), "E(vartheta)")?),
            ("theta".into(), state.moment(self.theta_block(), "E(theta)")?),
        ])
    }
}
