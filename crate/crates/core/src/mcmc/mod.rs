//! Metropolis-Hastings and Metropolis-within-Gibbs kernels with batch-wise
//! proposal-scale adaptation.
//!
//! Adaptation runs only while a chain is not frozen; engines freeze chains at
//! the end of burn-in so the post-burn-in kernel is a fixed Markov kernel.

mod proposal;

pub use proposal::{MhProposal, ProposalKind, Transform};

use crate::error::{Error, Result};
use crate::stats::RngHandle;
use crate::vi::SweepTrace;
use std::time::Instant;

/// Default acceptance rate targeted by [`adapt_scale`].
pub const TARGET_ACCEPTANCE: f64 = 0.45;
/// Proposals per coordinate between two adaptation steps.
pub const ADAPT_BATCH: u64 = 50;
/// Multiplicative adaptation gain.
pub const ADAPT_GAIN: f64 = 1.0;

/// One Metropolis-Hastings step for a scalar target.
///
/// Returns the next state and whether the candidate was accepted. Candidates
/// with `log_target = -inf` are always rejected.
pub fn mh_update<F>(current: f64, proposal: &MhProposal, log_target: F, rng: &mut RngHandle) -> (f64, bool)
where
    F: Fn(f64) -> f64,
{
    let (cand, log_correction) = proposal.propose(current, rng);
    let lt_cand = log_target(cand);
    if !(lt_cand > f64::NEG_INFINITY) || cand.is_nan() {
        return (current, false);
    }
    let log_ratio = lt_cand - log_target(current) + log_correction;
    if log_ratio >= 0.0 || rng.uniform().ln() < log_ratio {
        (cand, true)
    } else {
        (current, false)
    }
}

/// Multiplicative Robbins-Monro style scale update:
/// `scale * exp(gain * (observed_rate - target_rate))`.
pub fn adapt_scale(scale: f64, observed_rate: f64, target_rate: f64) -> f64 {
    scale * (ADAPT_GAIN * (observed_rate - target_rate)).exp()
}

/// Current values, acceptance counters and proposal scales of a
/// Metropolis-within-Gibbs chain. Persisting this across calls is what lets
/// inner chains warm-start.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub values: Vec<f64>,
    pub accepted: Vec<u64>,
    pub proposed: Vec<u64>,
    pub scales: Vec<f64>,
    batch_accepted: Vec<u64>,
    batch_proposed: Vec<u64>,
    target_rate: f64,
    frozen: bool,
}

impl ChainState {
    pub fn new(values: Vec<f64>, initial_scale: f64) -> Self {
        let d = values.len();
        Self {
            values,
            accepted: vec![0; d],
            proposed: vec![0; d],
            scales: vec![initial_scale; d],
            batch_accepted: vec![0; d],
            batch_proposed: vec![0; d],
            target_rate: TARGET_ACCEPTANCE,
            frozen: false,
        }
    }

    pub fn with_scales(mut self, scales: Vec<f64>) -> Self {
        assert_eq!(scales.len(), self.values.len());
        self.scales = scales;
        self
    }

    pub fn with_target_rate(mut self, rate: f64) -> Self {
        self.target_rate = rate;
        self
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Stops scale adaptation for good.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn acceptance_rate(&self, i: usize) -> f64 {
        if self.proposed[i] == 0 {
            0.0
        } else {
            self.accepted[i] as f64 / self.proposed[i] as f64
        }
    }

    /// Records one MH proposal outcome for coordinate `i` and adapts its
    /// scale at the end of each batch unless frozen.
    pub fn record(&mut self, i: usize, accepted: bool) {
        self.proposed[i] += 1;
        self.accepted[i] += accepted as u64;
        if self.frozen {
            return;
        }
        self.batch_proposed[i] += 1;
        self.batch_accepted[i] += accepted as u64;
        if self.batch_proposed[i] == ADAPT_BATCH {
            let rate = self.batch_accepted[i] as f64 / ADAPT_BATCH as f64;
            self.scales[i] = adapt_scale(self.scales[i], rate, self.target_rate);
            self.batch_proposed[i] = 0;
            self.batch_accepted[i] = 0;
        }
    }
}

type GibbsDraw<'a> = Box<dyn Fn(&[f64], &mut RngHandle) -> f64 + 'a>;
type LogConditional<'a> = Box<dyn Fn(&[f64], f64) -> f64 + 'a>;
type Constraint<'a> = Box<dyn Fn(&[f64]) -> std::result::Result<(), String> + 'a>;

/// How one coordinate is refreshed during a sweep.
pub enum UpdateRule<'a> {
    /// Exact draw from the full conditional given the other coordinates.
    Gibbs(GibbsDraw<'a>),
    /// Metropolis-Hastings step; the proposal scale is taken from the chain.
    Metropolis {
        kind: ProposalKind,
        log_conditional: LogConditional<'a>,
    },
    /// Coordinate held fixed.
    Fixed,
}

impl<'a> UpdateRule<'a> {
    pub fn gibbs(f: impl Fn(&[f64], &mut RngHandle) -> f64 + 'a) -> Self {
        Self::Gibbs(Box::new(f))
    }

    pub fn metropolis(kind: ProposalKind, f: impl Fn(&[f64], f64) -> f64 + 'a) -> Self {
        Self::Metropolis {
            kind,
            log_conditional: Box::new(f),
        }
    }
}

/// Ordered per-coordinate update rules plus an optional support check run
/// after every coordinate update.
pub struct Conditionals<'a> {
    pub rules: Vec<UpdateRule<'a>>,
    constraint: Option<Constraint<'a>>,
}

impl<'a> Conditionals<'a> {
    pub fn new(rules: Vec<UpdateRule<'a>>) -> Self {
        Self { rules, constraint: None }
    }

    pub fn with_constraint(mut self, check: impl Fn(&[f64]) -> std::result::Result<(), String> + 'a) -> Self {
        self.constraint = Some(Box::new(check));
        self
    }

    pub fn check(&self, values: &[f64]) -> std::result::Result<(), String> {
        match &self.constraint {
            Some(c) => c(values),
            None => Ok(()),
        }
    }
}

/// One Metropolis-within-Gibbs sweep in declaration order.
///
/// A constraint violation after any coordinate update is a hard error: it
/// means a conditional was mis-specified.
pub fn mwg_sweep(chain: &mut ChainState, conditionals: &Conditionals<'_>, rng: &mut RngHandle) -> Result<()> {
    assert_eq!(chain.dim(), conditionals.rules.len(), "one rule per coordinate");
    for i in 0..chain.dim() {
        match &conditionals.rules[i] {
            UpdateRule::Gibbs(draw) => {
                let v = draw(&chain.values, rng);
                chain.values[i] = v;
            }
            UpdateRule::Metropolis { kind, log_conditional } => {
                let proposal = MhProposal::new(*kind, chain.scales[i]);
                let others = &chain.values;
                let (v, acc) = mh_update(others[i], &proposal, |x| log_conditional(others, x), rng);
                chain.values[i] = v;
                chain.record(i, acc);
            }
            UpdateRule::Fixed => continue,
        }
        if let Err(detail) = conditionals.check(&chain.values) {
            return Err(Error::ConstraintViolation { coordinate: i, detail });
        }
    }
    Ok(())
}

/// Sweep-by-sweep record of a standalone MCMC run.
#[derive(Debug, Clone)]
pub struct McmcOutcome {
    pub chain: ChainState,
    /// One row per completed sweep, including burn-in.
    pub trace: SweepTrace,
}

/// Runs up to `iters` Metropolis-within-Gibbs sweeps, adapting proposal
/// scales during the first `burnin` sweeps only.
///
/// `monitor` maps the state after each sweep to the recorded statistics.
/// `on_sweep(k, values)` runs after sweep `k` and can stop the run early by
/// returning `false`. Failures carry the trace recorded so far.
pub fn run_mcmc(
    mut chain: ChainState,
    conditionals: &Conditionals<'_>,
    iters: usize,
    burnin: usize,
    rng: &mut RngHandle,
    monitor: impl Fn(&[f64]) -> Vec<(String, f64)>,
    mut on_sweep: impl FnMut(usize, &[f64]) -> bool,
) -> Result<McmcOutcome> {
    if let Err(detail) = conditionals.check(&chain.values) {
        return Err(Error::ConstraintViolation {
            coordinate: usize::MAX,
            detail: format!("initial state: {detail}"),
        });
    }
    let start = Instant::now();
    let mut trace = SweepTrace::default();
    for k in 1..=iters {
        if k > burnin {
            chain.freeze();
        }
        if let Err(e) = mwg_sweep(&mut chain, conditionals, rng) {
            return Err(e.with_trace(trace));
        }
        trace.push(&monitor(&chain.values), None, start.elapsed().as_secs_f64());
        if !on_sweep(k, &chain.values) {
            break;
        }
    }
    Ok(McmcOutcome { chain, trace })
}
