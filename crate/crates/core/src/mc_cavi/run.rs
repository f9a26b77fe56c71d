use std::path::Path;
use std::time::Instant;

use super::{estimate_block_expectations, McSchedule};
use crate::error::{Error, Result};
use crate::mcmc::ChainState;
use crate::stats::RngHandle;
use crate::vi::{ModelSpec, SweepTrace, VariationalState};

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunManifest {
    pub engine: String,
    pub seed: u64,
    pub schedule: Option<String>,
    pub requested_iters: usize,
    pub completed_iters: usize,
    pub warm_start: bool,
    pub blocks: usize,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// State of an MC-CAVI run that can be advanced one outer sweep at a time.
///
/// Inner chains persist between sweeps unless warm starting is switched off,
/// in which case every sweep restarts each chain from the model's initial
/// chain state.
pub struct McCaviRun<'m, M: ModelSpec + ?Sized> {
    model: &'m M,
    pub state: VariationalState,
    pub chains: Vec<Option<ChainState>>,
    pub schedule: McSchedule,
    pub trace: SweepTrace,
    rng: RngHandle,
    warm_start: bool,
    started: Instant,
}

impl<'m, M: ModelSpec + ?Sized> McCaviRun<'m, M> {
    pub fn new(model: &'m M, init: VariationalState, schedule: McSchedule, rng: RngHandle) -> Self {
        let chains = vec![None; model.block_count()];
        Self {
            model,
            state: init,
            chains,
            schedule,
            trace: SweepTrace::default(),
            rng,
            warm_start: true,
            started: Instant::now(),
        }
    }

    pub fn warm_start(mut self, on: bool) -> Self {
        self.warm_start = on;
        self
    }

    pub fn model(&self) -> &'m M {
        self.model
    }

    pub fn rng(&mut self) -> &mut RngHandle {
        &mut self.rng
    }

    /// One outer sweep over all blocks in declaration order.
    pub fn step(&mut self) -> Result<()> {
        let k = self.state.sweeps + 1;
        let n = self.schedule.sample_size(k);
        let adapting = self.schedule.in_burnin(k);
        for i in 0..self.model.block_count() {
            let block = if self.model.is_closed_form(i) {
                self.model.cavi_update(i, &self.state)?
            } else {
                let kernel = self.model.mc_kernel(i, &self.state)?;
                let mut chain = match (self.warm_start, self.chains[i].take()) {
                    (true, Some(c)) => c,
                    _ => self.model.init_chain(i)?,
                };
                if !adapting {
                    chain.freeze();
                }
                let estimates = estimate_block_expectations(&mut chain, kernel.as_ref(), n, &mut self.rng)?;
                self.chains[i] = Some(chain);
                self.model.absorb(i, &self.state, estimates)?
            };
            if !block.moments.all_finite() {
                return Err(Error::InvalidParameter(format!(
                    "block {i} produced non-finite moments at sweep {k}"
                )));
            }
            self.state.blocks[i] = block;
        }
        self.state.sweeps = k;
        let stats = self.model.monitored(&self.state)?;
        let elbo = self.model.elbo_analytic(&self.state).ok();
        self.trace.push(&stats, elbo, self.started.elapsed().as_secs_f64());
        Ok(())
    }

    /// Runs `iters` further sweeps; failures carry the trace so far.
    pub fn run(&mut self, iters: usize) -> Result<()> {
        for _ in 0..iters {
            if let Err(e) = self.step() {
                return Err(e.with_trace(self.trace.clone()));
            }
        }
        Ok(())
    }

    pub fn manifest(&self, seed: u64, requested_iters: usize) -> RunManifest {
        RunManifest {
            engine: "mc-cavi".into(),
            seed,
            schedule: Some(self.schedule.to_string()),
            requested_iters,
            completed_iters: self.state.sweeps,
            warm_start: self.warm_start,
            blocks: self.model.block_count(),
        }
    }

    pub fn into_parts(self) -> (VariationalState, SweepTrace) {
        (self.state, self.trace)
    }
}

/// Runs `total_iters` MC-CAVI sweeps from `init`.
pub fn run_mc_cavi<M: ModelSpec + ?Sized>(
    model: &M,
    init: VariationalState,
    schedule: McSchedule,
    total_iters: usize,
    rng: RngHandle,
) -> Result<(VariationalState, SweepTrace)> {
    if total_iters < schedule.burnin_iters {
        return Err(Error::InvalidParameter(format!(
            "total iterations {total_iters} shorter than burn-in {}",
            schedule.burnin_iters
        )));
    }
    let mut run = McCaviRun::new(model, init, schedule, rng);
    run.run(total_iters)?;
    Ok(run.into_parts())
}
