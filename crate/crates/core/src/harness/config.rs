use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mc_cavi::McSchedule;
use crate::models::nmr::ThetaShape;

/// The schedules of the A-B-C comparison.
pub const DEFAULT_SCHEDULES: [(usize, usize, usize); 5] = [
    (10, 10, 100_000),
    (1_000, 10, 100_000),
    (100_000, 10, 100_000),
    (10, 30, 100_000),
    (10, 50, 100_000),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Semi-conjugate normal model, CAVI and MC-CAVI.
    Example1,
    /// Constrained normal model, MCMC, MC-CAVI and BBVI.
    Example2,
    /// NMR deconvolution, MC-CAVI and MCMC.
    Nmr,
    /// MC-CAVI error against CAVI as the inner sample size grows.
    Theorem1Sweep,
    /// MC-CAVI over a list of A-B-C schedules.
    ScheduleSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Self::Example1,
        Self::Example2,
        Self::Nmr,
        Self::Theorem1Sweep,
        Self::ScheduleSweep,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Nmr => "nmr",
            Self::Theorem1Sweep => "theorem1-sweep",
            Self::ScheduleSweep => "schedule-sweep",
        }
    }

    /// Seed whose dataset the defaults were checked against.
    pub fn default_seed(self) -> u64 {
        match self {
            Self::Example1 | Self::Theorem1Sweep | Self::ScheduleSweep => 18733,
            Self::Example2 => 43,
            Self::Nmr => 2,
        }
    }

    /// Engines `all` expands to.
    pub fn engines(self) -> &'static [EngineChoice] {
        match self {
            Self::Example1 => &[EngineChoice::Cavi, EngineChoice::McCavi],
            Self::Example2 => &[EngineChoice::Mcmc, EngineChoice::McCavi, EngineChoice::Bbvi],
            Self::Nmr => &[EngineChoice::McCavi, EngineChoice::Mcmc],
            Self::Theorem1Sweep | Self::ScheduleSweep => &[EngineChoice::McCavi],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    Cavi,
    McCavi,
    Mcmc,
    Bbvi,
    #[default]
    All,
}

impl EngineChoice {
    pub fn id(self) -> &'static str {
        match self {
            Self::Cavi => "cavi",
            Self::McCavi => "mc-cavi",
            Self::Mcmc => "mcmc",
            Self::Bbvi => "bbvi",
            Self::All => "all",
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Cavi, Self::McCavi, Self::Mcmc, Self::Bbvi, Self::All]
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaviSettings {
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for CaviSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            max_sweeps: crate::vi::DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Unset counts fall back to the experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSettings {
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McCaviSettings {
    pub iters: Option<usize>,
    /// `"A,B,C"`.
    pub schedule: Option<String>,
    pub warm_start: bool,
}

impl Default for McCaviSettings {
    fn default() -> Self {
        Self {
            iters: None,
            schedule: None,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BbviSettings {
    pub iters: Option<usize>,
    pub samples: usize,
    pub eta: f64,
    pub control_variate: bool,
}

impl Default for BbviSettings {
    fn default() -> Self {
        Self {
            iters: None,
            samples: 10,
            eta: 0.5,
            control_variate: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmrSettings {
    pub theta_shape: ThetaShape,
}

/// Settings of the sample-size sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub replicates: usize,
    pub sample_sizes: Vec<usize>,
    pub iters: usize,
    /// Outer sweeps with proposal adaptation at the start of each run.
    pub adapt_iters: usize,
    /// Schedules for the A-B-C comparison, `"A,B,C"` each.
    pub schedules: Vec<String>,
    /// Sweeps after burn-in in the A-B-C comparison; the reported value is
    /// their average.
    pub tail: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            replicates: 20,
            sample_sizes: vec![10, 100, 1000],
            iters: 50,
            adapt_iters: 25,
            schedules: DEFAULT_SCHEDULES.iter().map(|(a, b, c)| format!("{a},{b},{c}")).collect(),
            tail: 10,
        }
    }
}

/// Complete description of one harness run.
///
/// At most one of `iters` and `budget_secs` may be set. `iters` overrides the
/// iteration count of every engine; `budget_secs` runs each engine until the
/// budget is spent, checking the clock between sweeps only. With neither,
/// each engine uses its own section's count or the experiment default.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub engine: EngineChoice,
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    pub budget_secs: Option<f64>,
    pub out: PathBuf,
    /// Directory written by `gen-fixtures`; datasets are regenerated from
    /// the seed when unset.
    pub fixtures: Option<PathBuf>,
    pub cavi: CaviSettings,
    pub mcmc: McmcSettings,
    pub mc_cavi: McCaviSettings,
    pub bbvi: BbviSettings,
    pub nmr: NmrSettings,
    pub sweep: SweepSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Example2,
            engine: EngineChoice::All,
            seed: None,
            iters: None,
            budget_secs: None,
            out: PathBuf::from("out"),
            fixtures: None,
            cavi: CaviSettings::default(),
            mcmc: McmcSettings::default(),
            mc_cavi: McCaviSettings::default(),
            bbvi: BbviSettings::default(),
            nmr: NmrSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| self.experiment.default_seed())
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters.is_some() && self.budget_secs.is_some() {
            return Err(Error::Config("set either an iteration count or a time budget, not both".into()));
        }
        if let Some(b) = self.budget_secs {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("time budget must be positive, got {b}")));
            }
        }
        if let Some(s) = &self.mc_cavi.schedule {
            McSchedule::parse(s)?;
        }
        for s in &self.sweep.schedules {
            McSchedule::parse(s)?;
        }
        if !(self.bbvi.eta > 0.0) || self.bbvi.samples < 2 {
            return Err(Error::Config("bbvi needs eta > 0 and at least two samples".into()));
        }
        for e in self.engines()? {
            if !self.experiment.engines().contains(&e) {
                return Err(Error::Config(format!(
                    "engine {e} is not available for experiment {}",
                    self.experiment
                )));
            }
        }
        Ok(())
    }

    /// Engines to run, in report order.
    pub fn engines(&self) -> Result<Vec<EngineChoice>> {
        Ok(match self.engine {
            EngineChoice::All => self.experiment.engines().to_vec(),
            e => vec![e],
        })
    }

    pub fn schedule_or(&self, default: &str) -> Result<McSchedule> {
        McSchedule::parse(self.mc_cavi.schedule.as_deref().unwrap_or(default))
    }
}
