use super::{
    admissible, check_data, kappa_conditional, psi_log_conditional, theta_conditional, vartheta_conditional, PSI_MAX,
};
use crate::error::{Error, Result};
use crate::mcmc::{ChainState, Conditionals, ProposalKind, UpdateRule};

/// Coordinate layout of the full MCMC state:
/// `[vartheta, theta, kappa_1, psi_1, ..., kappa_n, psi_n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcLayout {
    pub n: usize,
}

impl McmcLayout {
    pub const VARTHETA: usize = 0;
    pub const THETA: usize = 1;

    pub fn kappa(&self, j: usize) -> usize {
        2 + 2 * j
    }

    pub fn psi(&self, j: usize) -> usize {
        3 + 2 * j
    }

    pub fn dim(&self) -> usize {
        2 + 2 * self.n
    }

    /// First constraint violation in a full state, if any.
    pub fn violation(&self, v: &[f64]) -> Option<String> {
        if !(v[Self::THETA] > 0.0) {
            return Some(format!("theta = {} is not positive", v[Self::THETA]));
        }
        (0..self.n).find_map(|j| {
            let (k, p) = (v[self.kappa(j)], v[self.psi(j)]);
            (!admissible(k, p)).then(|| format!("pair {j}: kappa {k}, psi {p} violates |kappa| < psi < {PSI_MAX}"))
        })
    }
}

/// Starting state `vartheta = 4`, `theta = 1`, `(kappa_j, psi_j) = (0, 1)`.
pub fn mcmc_initial_chain(n: usize) -> ChainState {
    let layout = McmcLayout { n };
    let mut v = vec![0.0; layout.dim()];
    v[McmcLayout::VARTHETA] = 4.0;
    v[McmcLayout::THETA] = 1.0;
    for j in 0..n {
        v[layout.psi(j)] = 1.0;
    }
    ChainState::new(v, 1.0)
}

/// Exact full conditionals for `vartheta`, `theta` and each `kappa_j`, and
/// an independence MH step with a `U(0, 2)` proposal for each `psi_j`.
pub fn mcmc_conditionals(y: &[f64]) -> Result<Conditionals<'_>> {
    check_data(y)?;
    let n = y.len();
    let layout = McmcLayout { n };
    let mut rules = Vec::with_capacity(layout.dim());
    rules.push(UpdateRule::gibbs(move |v: &[f64], rng| {
        let s: f64 = (0..n).map(|j| y[j] - v[layout.kappa(j)]).sum();
        vartheta_conditional(s, n, v[McmcLayout::THETA]).sample(rng)
    }));
    rules.push(UpdateRule::gibbs(move |v: &[f64], rng| {
        let mu = v[McmcLayout::VARTHETA];
        let ss: f64 = (0..n).map(|j| (y[j] - mu - v[layout.kappa(j)]).powi(2)).sum();
        theta_conditional(n, ss).sample(rng)
    }));
    for j in 0..n {
        rules.push(UpdateRule::gibbs(move |v: &[f64], rng| {
            kappa_conditional(y[j], v[McmcLayout::VARTHETA], v[McmcLayout::THETA], v[layout.psi(j)]).sample(rng)
        }));
        rules.push(UpdateRule::metropolis(
            ProposalKind::IndependentUniform {
                lower: 0.0,
                upper: PSI_MAX,
            },
            move |v: &[f64], psi| psi_log_conditional(v[layout.kappa(j)], psi),
        ));
    }
    Ok(Conditionals::new(rules).with_constraint(move |v| match layout.violation(v) {
        Some(msg) => Err(msg),
        None => Ok(()),
    }))
}

/// Rejects a starting state outside the admissible set.
pub fn validate_mcmc_state(n: usize, v: &[f64]) -> Result<()> {
    let layout = McmcLayout { n };
    if v.len() != layout.dim() {
        return Err(Error::InvalidParameter(format!("state has {} entries, expected {}", v.len(), layout.dim())));
    }
    match layout.violation(v) {
        Some(detail) => Err(Error::ConstraintViolation {
            coordinate: usize::MAX,
            detail,
        }),
        None => Ok(()),
    }
}
