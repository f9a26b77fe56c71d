//! Mean-field variational state, the model abstraction shared by all
//! engines, the ELBO and the deterministic CAVI driver.
//!
//! Blocks exchange named expectations (`E(tau)`, `E(theta^2)`, ...) rather
//! than densities: every coordinate update in the benchmark models is written
//! in terms of a handful of moments of the other factors.

mod cavi;
mod elbo;
mod trace;

pub use cavi::{cavi_update_block, run_cavi, run_cavi_sweeps, CaviOutcome, DEFAULT_MAX_SWEEPS};
pub use elbo::{elbo, elbo_monte_carlo, ElboMode};
pub use trace::SweepTrace;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mcmc::ChainState;
use crate::stats::{Distribution, RngHandle};

/// Named vectors of cached expectations. Scalars are length-one vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments(BTreeMap<String, Vec<f64>>);

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), vec![value]);
    }

    pub fn set_vec(&mut self, name: &str, values: Vec<f64>) {
        self.0.insert(name.to_string(), values);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    /// Scalar moment; a missing entry is a configuration error.
    pub fn get(&self, name: &str) -> Result<f64> {
        match self.0.get(name).map(Vec::as_slice) {
            Some([v]) => Ok(*v),
            Some(v) => Err(Error::Config(format!("moment {name} has {} entries, expected one", v.len()))),
            None => Err(Error::Config(format!("missing cached moment {name}"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        self.0
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("missing cached moment {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of stored scalars.
    pub fn size(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.0.values().flatten().all(|v| v.is_finite())
    }
}

/// One mean-field factor: an optional parametric law plus the moments other
/// blocks read from it. MC-updated blocks usually carry moments only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockState {
    pub factor: Option<Distribution>,
    pub moments: Moments,
}

impl BlockState {
    pub fn from_moments(moments: Moments) -> Self {
        Self { factor: None, moments }
    }

    pub fn from_factor(factor: Distribution, moments: Moments) -> Self {
        Self {
            factor: Some(factor),
            moments,
        }
    }
}

/// Current variational approximation: one [`BlockState`] per block and the
/// number of completed outer sweeps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariationalState {
    pub blocks: Vec<BlockState>,
    pub sweeps: usize,
}

impl VariationalState {
    pub fn new(blocks: Vec<BlockState>) -> Self {
        Self { blocks, sweeps: 0 }
    }

    pub fn block(&self, i: usize) -> &BlockState {
        &self.blocks[i]
    }

    pub fn moment(&self, i: usize, name: &str) -> Result<f64> {
        self.blocks[i].moments.get(name)
    }

    pub fn moment_vec(&self, i: usize, name: &str) -> Result<&[f64]> {
        self.blocks[i].moments.vector(name)
    }
}

/// Inner-chain kernel for a block updated by Monte Carlo.
///
/// `statistics` maps a chain state to the block's sufficient statistics; the
/// MC-CAVI driver only keeps their running sums, so memory is independent of
/// the number of inner sweeps.
pub trait InnerKernel {
    fn sweep(&self, chain: &mut ChainState, rng: &mut RngHandle) -> Result<()>;

    /// Statistic names with their lengths, in the order `statistics` writes.
    fn layout(&self) -> Vec<(String, usize)>;

    fn statistics(&self, values: &[f64], out: &mut [f64]);
}

/// A model in the form the engines consume.
///
/// Blocks are updated in declaration order. Blocks with
/// `is_closed_form(i) == true` implement [`ModelSpec::cavi_update`]; the rest
/// implement [`ModelSpec::mc_kernel`], [`ModelSpec::init_chain`] and
/// [`ModelSpec::absorb`].
pub trait ModelSpec {
    fn block_names(&self) -> Vec<String>;

    fn block_count(&self) -> usize {
        self.block_names().len()
    }

    fn is_closed_form(&self, i: usize) -> bool;

    /// Default starting state.
    fn initial_state(&self) -> VariationalState;

    /// Exact coordinate-ascent optimizer of block `i` given the other blocks.
    fn cavi_update(&self, i: usize, _state: &VariationalState) -> Result<BlockState> {
        Err(Error::Config(format!("block {i} has no closed-form update")))
    }

    /// Kernel targeting the block's variational conditional given the other
    /// blocks' current moments.
    fn mc_kernel<'a>(&'a self, i: usize, _state: &VariationalState) -> Result<Box<dyn InnerKernel + 'a>> {
        Err(Error::Config(format!("block {i} has no Monte Carlo kernel")))
    }

    fn init_chain(&self, i: usize) -> Result<ChainState> {
        Err(Error::Config(format!("block {i} has no inner chain")))
    }

    /// Turns averaged statistics into the block's new state.
    fn absorb(&self, i: usize, _state: &VariationalState, _estimates: Moments) -> Result<BlockState> {
        Err(Error::Config(format!("block {i} cannot absorb Monte Carlo estimates")))
    }

    /// Model-declared convergence statistics.
    fn monitored(&self, state: &VariationalState) -> Result<Vec<(String, f64)>>;

    fn elbo_analytic(&self, _state: &VariationalState) -> Result<f64> {
        Err(Error::Config("analytic ELBO not available for this model".into()))
    }

    /// Draws the full latent vector from q.
    fn sample_q(&self, _state: &VariationalState, _rng: &mut RngHandle) -> Result<Vec<f64>> {
        Err(Error::Config("sampling from q not available for this model".into()))
    }

    fn log_q(&self, _state: &VariationalState, _z: &[f64]) -> Result<f64> {
        Err(Error::Config("log q not available for this model".into()))
    }

    fn log_joint(&self, _z: &[f64]) -> Result<f64> {
        Err(Error::Config("log joint not available for this model".into()))
    }
}
