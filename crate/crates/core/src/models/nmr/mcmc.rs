use std::time::Instant;

use super::model::NmrModel;
use super::template::mat_vec;
use crate::error::{Error, Result};
use crate::mcmc::ChainState;
use crate::stats::RngHandle;
use crate::vi::{InnerKernel, SweepTrace};

/// Metropolis-within-Gibbs sampler for the NMR model: the MC-CAVI kernels
/// with exact draws of `psi` and `theta` in place of their variational
/// updates.
pub struct NmrMcmc<'m> {
    model: &'m NmrModel,
    pub psi: Vec<f64>,
    pub theta: f64,
    pub peaks: ChainState,
    pub wavelets: ChainState,
    pub trace: SweepTrace,
    pub sweeps: usize,
    burnin: usize,
    rng: RngHandle,
    started: Instant,
}

impl<'m> NmrMcmc<'m> {
    /// Chains start like the MC-CAVI inner chains with `theta = 2a/e`.
    pub fn new(model: &'m NmrModel, burnin: usize, rng: RngHandle) -> Self {
        let p = model.priors();
        Self {
            model,
            psi: vec![1.0; model.n()],
            theta: 2.0 * p.a / p.e,
            peaks: model.initial_peak_chain(),
            wavelets: model.initial_wavelet_chain(),
            trace: SweepTrace::default(),
            sweeps: 0,
            burnin,
            rng,
            started: Instant::now(),
        }
    }

    pub fn vartheta(&self) -> &[f64] {
        &self.wavelets.values[..self.model.n()]
    }

    pub fn tau(&self) -> &[f64] {
        &self.wavelets.values[self.model.n()..]
    }

    /// Current `T beta`.
    pub fn template_fit(&self) -> Vec<f64> {
        let m = self.model;
        let (nb, nd) = (m.metabolites(), m.metabolites() + m.multiplets());
        let v = &self.peaks.values;
        mat_vec(&m.template_columns(v[nd], &v[nb..nd]), &v[..nb])
    }

    /// Current `T beta + W^-1 vartheta`.
    pub fn fitted_spectrum(&self) -> Result<Vec<f64>> {
        let s = self.model.wavelet().inverse(self.vartheta())?;
        Ok(self.template_fit().iter().zip(&s).map(|(a, b)| a + b).collect())
    }

    /// One sweep over `psi`, `theta`, `(beta, delta, gamma)`, `(vartheta, tau)`.
    pub fn step(&mut self) -> Result<()> {
        let m = self.model;
        if self.sweeps == self.burnin {
            self.peaks.freeze();
            self.wavelets.freeze();
        }
        let n = m.n();
        self.psi = m.draw_psi(self.theta, &self.wavelets.values[..n], &mut self.rng);
        self.theta = m.draw_theta(&self.psi, &self.peaks.values, &self.wavelets.values, &mut self.rng)?;
        let target = m.peak_target(&self.wavelets.values[..n])?;
        m.peak_kernel(self.theta, target).sweep(&mut self.peaks, &mut self.rng)?;
        let resid = m.transformed_residual(&self.template_fit())?;
        m.wavelet_kernel(self.theta, self.psi.clone(), resid)
            .sweep(&mut self.wavelets, &mut self.rng)?;
        if let Err(detail) = m.check_constraints(self.vartheta(), self.tau()) {
            return Err(Error::ConstraintViolation {
                coordinate: self.sweeps,
                detail,
            });
        }
        self.sweeps += 1;
        let row = self.row();
        self.trace.push(&row, None, self.started.elapsed().as_secs_f64());
        Ok(())
    }

    fn row(&self) -> Vec<(String, f64)> {
        let m = self.model;
        let (nb, nd) = (m.metabolites(), m.metabolites() + m.multiplets());
        let v = &self.peaks.values;
        let mut out: Vec<(String, f64)> = (0..nb).map(|k| (format!("beta[{}]", k + 1), v[k])).collect();
        out.push(("gamma".into(), v[nd]));
        for u in 0..m.multiplets() {
            out.push((format!("delta[{}]", u + 1), v[nb + u]));
        }
        out.push(("theta".into(), self.theta));
        out
    }

    /// Runs `sweeps` further sweeps; failures carry the trace so far.
    pub fn run(&mut self, sweeps: usize) -> Result<()> {
        for _ in 0..sweeps {
            if let Err(e) = self.step() {
                return Err(e.with_trace(self.trace.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NmrMcmcOutcome {
    pub trace: SweepTrace,
    pub fitted: Vec<f64>,
}

/// Runs `sweeps` MCMC sweeps, adapting proposal scales for the first `burnin`.
pub fn run_nmr_mcmc(model: &NmrModel, sweeps: usize, burnin: usize, rng: RngHandle) -> Result<NmrMcmcOutcome> {
    let mut chain = NmrMcmc::new(model, burnin, rng);
    chain.run(sweeps)?;
    Ok(NmrMcmcOutcome {
        fitted: chain.fitted_spectrum()?,
        trace: chain.trace,
    })
}
