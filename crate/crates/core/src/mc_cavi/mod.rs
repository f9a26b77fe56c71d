//! Monte Carlo coordinate ascent: blocks without closed-form updates get
//! their expectations from persistent inner Metropolis-within-Gibbs chains.

mod delta;
mod run;

pub use delta::{delta_elbo_rule, DeltaElbo, DELTA_REPLICATES};
pub use run::{run_mc_cavi, McCaviRun, RunManifest};

use crate::error::{Error, Result};
use crate::mcmc::{mwg_sweep, ChainState, Conditionals};
use crate::stats::RngHandle;
use crate::vi::{InnerKernel, Moments, SweepTrace};

/// Staged inner sample sizes: `burnin_n` draws for the first `burnin_iters`
/// outer sweeps and `main_n` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct McSchedule {
    pub burnin_n: usize,
    pub burnin_iters: usize,
    pub main_n: usize,
}

impl Default for McSchedule {
    fn default() -> Self {
        Self {
            burnin_n: 10,
            burnin_iters: 10,
            main_n: 1000,
        }
    }
}

impl McSchedule {
    pub fn new(burnin_n: usize, burnin_iters: usize, main_n: usize) -> Result<Self> {
        if burnin_n == 0 || main_n == 0 {
            return Err(Error::InvalidParameter("inner sample sizes must be positive".into()));
        }
        if burnin_n > main_n {
            return Err(Error::InvalidParameter(format!(
                "sample size must not decrease after burn-in ({burnin_n} > {main_n})"
            )));
        }
        Ok(Self {
            burnin_n,
            burnin_iters,
            main_n,
        })
    }

    /// Same sample size throughout, with `burnin_iters` adaptive sweeps.
    pub fn constant(n: usize, burnin_iters: usize) -> Result<Self> {
        Self::new(n, burnin_iters, n)
    }

    /// Inner sample size used at outer sweep `k` (1-based).
    pub fn sample_size(&self, k: usize) -> usize {
        if k <= self.burnin_iters {
            self.burnin_n
        } else {
            self.main_n
        }
    }

    pub fn in_burnin(&self, k: usize) -> bool {
        k <= self.burnin_iters
    }

    /// Parses `A,B,C`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::Config(format!("schedule must be A,B,C, got {text:?}")));
        };
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Config(format!("schedule entry {s:?}: {e}")))
        };
        Self::new(num(a)?, num(b)?, num(c)?).map_err(|e| Error::Config(e.to_string()))
    }
}

impl std::fmt::Display for McSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.burnin_n, self.burnin_iters, self.main_n)
    }
}

/// Fixed-size accumulator of statistic sums.
#[derive(Debug, Clone)]
pub struct RunningMeans {
    sums: Vec<f64>,
    scratch: Vec<f64>,
    count: usize,
}

impl RunningMeans {
    pub fn new(len: usize) -> Self {
        Self {
            sums: vec![0.0; len],
            scratch: vec![0.0; len],
            count: 0,
        }
    }

    pub fn push_with(&mut self, fill: impl FnOnce(&mut [f64])) {
        fill(&mut self.scratch);
        for (s, v) in self.sums.iter_mut().zip(&self.scratch) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of scalars held, independent of how many samples were pushed.
    pub fn footprint(&self) -> usize {
        self.sums.len() + self.scratch.len()
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sums.iter().map(|s| s / n).collect()
    }
}

/// Adapts per-coordinate [`Conditionals`] plus statistic functions into an
/// [`InnerKernel`].
pub struct MwgKernel<'a> {
    pub conditionals: Conditionals<'a>,
    pub statistics: Vec<(String, Box<dyn Fn(&[f64]) -> f64 + 'a>)>,
}

impl<'a> MwgKernel<'a> {
    pub fn new(conditionals: Conditionals<'a>) -> Self {
        Self {
            conditionals,
            statistics: Vec::new(),
        }
    }

    pub fn statistic(mut self, name: &str, f: impl Fn(&[f64]) -> f64 + 'a) -> Self {
        self.statistics.push((name.to_string(), Box::new(f)));
        self
    }
}

impl InnerKernel for MwgKernel<'_> {
    fn sweep(&self, chain: &mut ChainState, rng: &mut RngHandle) -> Result<()> {
        mwg_sweep(chain, &self.conditionals, rng)
    }

    fn layout(&self) -> Vec<(String, usize)> {
        self.statistics.iter().map(|(n, _)| (n.clone(), 1)).collect()
    }

    fn statistics(&self, values: &[f64], out: &mut [f64]) {
        for (o, (_, f)) in out.iter_mut().zip(&self.statistics) {
            *o = f(values);
        }
    }
}

/// Runs `n` inner sweeps continuing from `chain` and returns the averages of
/// the kernel's statistics over the `n` post-sweep states.
pub fn estimate_block_expectations(
    chain: &mut ChainState,
    kernel: &dyn InnerKernel,
    n: usize,
    rng: &mut RngHandle,
) -> Result<Moments> {
    let (moments, _) = estimate_with_footprint(chain, kernel, n, rng)?;
    Ok(moments)
}

/// As [`estimate_block_expectations`], also returning the accumulator's
/// footprint in scalars.
pub fn estimate_with_footprint(
    chain: &mut ChainState,
    kernel: &dyn InnerKernel,
    n: usize,
    rng: &mut RngHandle,
) -> Result<(Moments, usize)> {
    if n == 0 {
        return Err(Error::InvalidParameter("inner sample size must be at least 1".into()));
    }
    let layout = kernel.layout();
    let total: usize = layout.iter().map(|(_, l)| l).sum();
    let mut acc = RunningMeans::new(total);
    for _ in 0..n {
        kernel.sweep(chain, rng)?;
        acc.push_with(|out| kernel.statistics(&chain.values, out));
    }
    let means = acc.means();
    let mut moments = Moments::new();
    let mut offset = 0;
    for (name, len) in layout {
        moments.set_vec(&name, means[offset..offset + len].to_vec());
        offset += len;
    }
    Ok((moments, acc.footprint()))
}

/// True iff the last `window` values span at most `band` and the means of
/// the last two windows differ by at most `band / 2`.
///
/// Traces shorter than two windows, or lacking the statistic, never count as
/// a plateau.
pub fn plateau_detect(trace: &SweepTrace, statistic: &str, window: usize, band: f64) -> bool {
    let Some(col) = trace.column(statistic) else {
        return false;
    };
    if window == 0 || col.len() < 2 * window {
        return false;
    }
    let last = &col[col.len() - window..];
    let prev = &col[col.len() - 2 * window..col.len() - window];
    let (lo, hi) = last
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    hi - lo <= band && (mean(last) - mean(prev)).abs() <= band / 2.0
}

/// First sweep (1-based) at which [`plateau_detect`] holds on the trace
/// prefix ending there.
pub fn plateau_onset(trace: &SweepTrace, statistic: &str, window: usize, band: f64) -> Option<usize> {
    let col = trace.column(statistic)?;
    (2 * window..=col.len()).find(|&end| {
        let mut prefix = SweepTrace::new(vec![statistic.to_string()]);
        for v in &col[..end] {
            prefix.push(&[(statistic.to_string(), *v)], None, 0.0);
        }
        plateau_detect(&prefix, statistic, window, band)
    })
}
