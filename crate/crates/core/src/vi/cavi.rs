use std::time::Instant;

use super::{ModelSpec, SweepTrace, VariationalState};
use crate::error::{Error, Result};

/// Sweep cap applied by [`run_cavi`] when none is given.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// Replaces block `i` by its exact coordinate-ascent optimizer.
pub fn cavi_update_block<M: ModelSpec + ?Sized>(model: &M, state: &VariationalState, i: usize) -> Result<VariationalState> {
    if !model.is_closed_form(i) {
        return Err(Error::Config(format!("block {i} is not in the closed-form set")));
    }
    let block = model.cavi_update(i, state)?;
    if !block.moments.all_finite() {
        return Err(Error::InvalidParameter(format!("block {i} update produced non-finite moments")));
    }
    let mut next = state.clone();
    next.blocks[i] = block;
    Ok(next)
}

fn full_sweep<M: ModelSpec + ?Sized>(model: &M, state: &mut VariationalState) -> Result<()> {
    for i in 0..model.block_count() {
        let block = model.cavi_update(i, state)?;
        if !block.moments.all_finite() {
            return Err(Error::InvalidParameter(format!("block {i} update produced non-finite moments")));
        }
        state.blocks[i] = block;
    }
    state.sweeps += 1;
    Ok(())
}

fn require_closed_form<M: ModelSpec + ?Sized>(model: &M) -> Result<()> {
    match (0..model.block_count()).find(|&i| !model.is_closed_form(i)) {
        Some(i) => Err(Error::Config(format!(
            "CAVI needs closed-form updates for every block; block {i} has none"
        ))),
        None => Ok(()),
    }
}

/// Result of a converged CAVI run.
#[derive(Debug, Clone)]
pub struct CaviOutcome {
    pub state: VariationalState,
    pub trace: SweepTrace,
    /// Sweeps executed.
    pub sweeps: usize,
    /// First sweep whose output the next sweep left unchanged within the
    /// tolerance. Confirming convergence costs one extra sweep, so this is
    /// `sweeps - 1`.
    pub converged_at: usize,
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else {
        (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Sweeps until every monitored statistic moves by less than `rel_tol`
/// relative to the previous sweep.
///
/// The initial state counts as sweep 0 when the model can evaluate its
/// monitored statistics there, so a start at the fixed point stops after one
/// sweep.
pub fn run_cavi<M: ModelSpec + ?Sized>(
    model: &M,
    init: VariationalState,
    rel_tol: f64,
    max_sweeps: usize,
) -> Result<CaviOutcome> {
    require_closed_form(model)?;
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let start = Instant::now();
    let mut state = init;
    state.sweeps = 0;
    let mut previous = model.monitored(&state).ok();
    let mut trace = SweepTrace::default();
    for k in 1..=max_sweeps {
        if let Err(e) = full_sweep(model, &mut state) {
            return Err(e.with_trace(trace));
        }
        let current = match model.monitored(&state) {
            Ok(c) => c,
            Err(e) => return Err(e.with_trace(trace)),
        };
        let elbo = model.elbo_analytic(&state).ok();
        trace.push(&current, elbo, start.elapsed().as_secs_f64());
        let done = previous.as_ref().is_some_and(|prev| {
            prev.len() == current.len()
                && prev
                    .iter()
                    .zip(&current)
                    .all(|((_, a), (_, b))| relative_change(*a, *b) < rel_tol)
        });
        if done {
            return Ok(CaviOutcome {
                state,
                trace,
                sweeps: k,
                converged_at: k - 1,
            });
        }
        previous = Some(current);
    }
    Err(Error::NotConverged {
        sweeps: max_sweeps,
        trace: Box::new(trace),
    })
}

/// Runs exactly `sweeps` CAVI sweeps without a stopping rule.
pub fn run_cavi_sweeps<M: ModelSpec + ?Sized>(
    model: &M,
    init: VariationalState,
    sweeps: usize,
) -> Result<(VariationalState, SweepTrace)> {
    require_closed_form(model)?;
    let start = Instant::now();
    let mut state = init;
    let mut trace = SweepTrace::default();
    for _ in 0..sweeps {
        if let Err(e) = full_sweep(model, &mut state) {
            return Err(e.with_trace(trace));
        }
        let current = model.monitored(&state).map_err(|e| e.with_trace(trace.clone()))?;
        trace.push(&current, model.elbo_analytic(&state).ok(), start.elapsed().as_secs_f64());
    }
    Ok((state, trace))
}
