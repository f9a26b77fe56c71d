use crate::error::{Error, Result};
use crate::mcmc::ChainState;
use crate::stats::RngHandle;
use crate::vi::{ModelSpec, VariationalState};

use super::estimate_block_expectations;

/// Replicate count for [`delta_elbo_rule`].
pub const DELTA_REPLICATES: usize = 30;

/// Sample mean and sd of the ELBO change produced by one MC block update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaElbo {
    pub mean: f64,
    pub sd: f64,
    /// `sd <= nu && |mean| < k * sd`.
    pub stop: bool,
}

/// Estimates the distribution of the ELBO change caused by updating MC block
/// `i` with `n` inner draws, over `replicates` independent replicates that
/// each restart from a copy of `chain`.
///
/// Uses the analytic ELBO when the model has one, otherwise a Monte Carlo
/// ELBO with `mc_samples` draws on a fixed stream (common random numbers, so
/// the difference isolates the update).
#[allow(clippy::too_many_arguments)]
pub fn delta_elbo_rule<M: ModelSpec + ?Sized>(
    model: &M,
    state: &VariationalState,
    i: usize,
    chain: &ChainState,
    n: usize,
    rng: &mut RngHandle,
    k: f64,
    nu: f64,
    replicates: usize,
    mc_samples: usize,
) -> Result<DeltaElbo> {
    if model.is_closed_form(i) {
        return Err(Error::Config(format!("block {i} is not a Monte Carlo block")));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least two replicates".into()));
    }
    let analytic = model.elbo_analytic(state).is_ok();
    let crn_seed = rng.fork().seed();
    let eval = |s: &VariationalState| -> Result<f64> {
        if analytic {
            model.elbo_analytic(s)
        } else {
            let mut r = RngHandle::new(crn_seed);
            crate::vi::elbo_monte_carlo(model, s, mc_samples, &mut r)
                .map(|(m, _)| m)
                .map_err(|e| Error::Config(format!("ELBO unavailable: {e}")))
        }
    };
    let base = eval(state)?;
    let kernel = model.mc_kernel(i, state)?;
    let mut deltas = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let mut c = chain.clone();
        let mut stream = rng.fork();
        let est = estimate_block_expectations(&mut c, kernel.as_ref(), n, &mut stream)?;
        let mut next = state.clone();
        next.blocks[i] = model.absorb(i, state, est)?;
        deltas.push(eval(&next)? - base);
    }
    let m = deltas.iter().sum::<f64>() / replicates as f64;
    let sd = (deltas.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (replicates as f64 - 1.0)).sqrt();
    Ok(DeltaElbo {
        mean: m,
        sd,
        stop: sd <= nu && m.abs() < k * sd,
    })
}
