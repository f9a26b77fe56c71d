use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{EngineChoice, Experiment, ExperimentConfig};
use super::summary::{pointwise_band, quantile};
use super::svg::{emit_fit_plot, LineChart};
use super::{file_stem, ReportBundle, RunRecord, Table};
use crate::bbvi::{run_bbvi_until, BbviModel, BbviOptions};
use crate::error::{Error, Result};
use crate::mc_cavi::{McCaviRun, McSchedule, RunManifest};
use crate::mcmc::run_mcmc;
use crate::models::model1::{self, Model1, TauUpdate};
use crate::models::model2::{self, mcmc_conditionals, mcmc_initial_chain, McmcLayout, Model2, Model2Bbvi, Truth};
use crate::models::nmr::{generate_fixture, NmrFixture, NmrMcmc, NmrModel};
use crate::stats::RngHandle;
use crate::vi::{run_cavi, run_cavi_sweeps, ModelSpec, SweepTrace, VariationalState};

pub const FIXTURE_EXAMPLE1: &str = "example1.txt";
pub const FIXTURE_EXAMPLE2: &str = "example2.txt";
pub const FIXTURE_NMR_DIR: &str = "nmr";

const EXAMPLE1_N: usize = 1000;
const EXAMPLE2_N: usize = 100;

/// How long an engine runs.
#[derive(Debug, Clone, Copy)]
enum Limit {
    Iters(usize),
    Budget(f64),
}

impl Limit {
    fn resolve(cfg: &ExperimentConfig, engine_iters: Option<usize>, default: usize) -> Self {
        match (cfg.budget_secs, cfg.iters) {
            (Some(b), _) => Self::Budget(b),
            (None, Some(n)) => Self::Iters(n),
            (None, None) => Self::Iters(engine_iters.unwrap_or(default)),
        }
    }

    /// Whether sweep `done + 1` should start.
    fn more(&self, done: usize, start: &Instant) -> bool {
        match *self {
            Self::Iters(n) => done < n,
            Self::Budget(b) => start.elapsed().as_secs_f64() < b,
        }
    }

    fn requested(&self) -> usize {
        match *self {
            Self::Iters(n) => n,
            Self::Budget(_) => 0,
        }
    }

    fn max_iters(&self) -> usize {
        match *self {
            Self::Iters(n) => n,
            Self::Budget(_) => usize::MAX,
        }
    }
}

/// The configured burn-in when the run got past it, half the run otherwise.
fn burnin_for(configured: usize, completed: usize) -> usize {
    if completed > configured {
        configured
    } else {
        completed / 2
    }
}

/// Curves sampled once per sweep, for fit charts.
struct Fit {
    x: Vec<f64>,
    data: Vec<f64>,
    curves: Vec<Vec<f64>>,
}

struct EngineRun {
    engine: String,
    trace: SweepTrace,
    burnin: usize,
    manifest: RunManifest,
    error: Option<String>,
    fit: Option<Fit>,
}

fn manifest(engine: &str, seed: u64, schedule: Option<&McSchedule>, limit: Limit, completed: usize, blocks: usize) -> RunManifest {
    RunManifest {
        engine: engine.into(),
        seed,
        schedule: schedule.map(|s| s.to_string()),
        requested_iters: limit.requested(),
        completed_iters: completed,
        warm_start: true,
        blocks,
    }
}

/// Reads one number per line; `#` starts a comment.
pub fn load_series(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), k + 1)))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("{}: no data", path.display())));
    }
    Ok(out)
}

fn save_series(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let mut text = format!("# {header}\n");
    for v in values {
        let _ = writeln!(text, "{v:?}");
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes the three synthetic datasets under `dir`, each generated from its
/// experiment's default seed unless `seed` is given.
pub fn write_fixtures(dir: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let s1 = seed.unwrap_or(Experiment::Example1.default_seed());
    let s2 = seed.unwrap_or(Experiment::Example2.default_seed());
    let s3 = seed.unwrap_or(Experiment::Nmr.default_seed());
    let p1 = dir.join(FIXTURE_EXAMPLE1);
    save_series(
        &p1,
        &format!("n = {EXAMPLE1_N} draws from N(10, 100), seed {s1}"),
        &model1::generate(EXAMPLE1_N, &mut RngHandle::new(s1)),
    )?;
    let p2 = dir.join(FIXTURE_EXAMPLE2);
    save_series(
        &p2,
        &format!("n = {EXAMPLE2_N} constrained-model observations, seed {s2}"),
        &model2::generate(EXAMPLE2_N, Truth::default(), &mut RngHandle::new(s2)),
    )?;
    let p3 = dir.join(FIXTURE_NMR_DIR);
    generate_fixture(&mut RngHandle::new(s3))?.save(&p3)?;
    Ok(vec![p1, p2, p3])
}

fn example1_data(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    match &cfg.fixtures {
        Some(dir) => load_series(&dir.join(FIXTURE_EXAMPLE1)),
        None => Ok(model1::generate(EXAMPLE1_N, &mut RngHandle::new(cfg.seed()))),
    }
}

fn example2_data(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    match &cfg.fixtures {
        Some(dir) => load_series(&dir.join(FIXTURE_EXAMPLE2)),
        None => Ok(model2::generate(EXAMPLE2_N, Truth::default(), &mut RngHandle::new(cfg.seed()))),
    }
}

fn nmr_fixture(cfg: &ExperimentConfig) -> Result<NmrFixture> {
    match &cfg.fixtures {
        Some(dir) => NmrFixture::load(&dir.join(FIXTURE_NMR_DIR)),
        None => generate_fixture(&mut RngHandle::new(cfg.seed())),
    }
}

/// Runs the configured experiment and writes its bundle to `cfg.out`.
///
/// Configuration and fixture errors are returned; engine failures are
/// recorded in the bundle, which is still written, with `failed` set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let mut bundle = ReportBundle::new(cfg.experiment, cfg.seed(), &cfg.out);
    let runs = match cfg.experiment {
        Experiment::Example1 => example1(cfg)?,
        Experiment::Example2 => example2(cfg)?,
        Experiment::Nmr => nmr(cfg)?,
        Experiment::Theorem1Sweep => {
            bundle.table = Some(theorem1_sweep(cfg, &mut bundle)?);
            Vec::new()
        }
        Experiment::ScheduleSweep => {
            let (runs, table) = schedule_sweep(cfg)?;
            bundle.table = Some(table);
            runs
        }
    };
    for run in runs {
        let stem = file_stem(&run.engine);
        let trace_file = format!("{stem}_trace.csv");
        run.trace.save_csv(&cfg.out.join(&trace_file))?;
        if let Some(fit) = &run.fit {
            let curves = &fit.curves[run.burnin.min(fit.curves.len())..];
            if !curves.is_empty() {
                let (mean, lo, hi) = pointwise_band(curves)?;
                let svg = format!("{stem}_fit.svg");
                emit_fit_plot(&cfg.out.join(&svg), &format!("{} fit", run.engine), &fit.x, &fit.data, &mean, &lo, &hi)?;
                let band = Table {
                    name: format!("{stem}_fit"),
                    header: ["x", "data", "mean", "lower", "upper"].map(String::from).to_vec(),
                    rows: (0..fit.x.len())
                        .map(|i| vec![fit.x[i], fit.data[i], mean[i], lo[i], hi[i]])
                        .collect(),
                };
                band.save(&cfg.out.join(format!("{}.csv", band.name)))?;
                bundle.plots.push(svg);
            }
        }
        bundle.runs.push(RunRecord {
            engine: run.engine,
            trace_file,
            burnin: run.burnin,
            manifest: run.manifest,
            error: run.error,
            summary: Vec::new(),
        });
    }
    bundle.finalize()?;
    Ok(bundle)
}

/// Drives an MC-CAVI run under `limit`, calling `each` after every sweep.
fn drive_mc_cavi<M: ModelSpec>(
    model: &M,
    init: VariationalState,
    schedule: McSchedule,
    warm_start: bool,
    limit: Limit,
    rng: RngHandle,
    mut each: impl FnMut(&M, &VariationalState),
) -> (McCaviRun<'_, M>, Option<String>) {
    let mut run = McCaviRun::new(model, init, schedule, rng).warm_start(warm_start);
    let start = Instant::now();
    let mut error = None;
    while limit.more(run.state.sweeps, &start) {
        if let Err(e) = run.step() {
            error = Some(e.to_string());
            break;
        }
        each(model, &run.state);
    }
    (run, error)
}

fn mc_cavi_record<M: ModelSpec>(
    engine: &str,
    cfg: &ExperimentConfig,
    run: McCaviRun<'_, M>,
    error: Option<String>,
    limit: Limit,
    fit: Option<Fit>,
) -> EngineRun {
    let completed = run.state.sweeps;
    let mut m = run.manifest(cfg.seed(), limit.requested());
    m.engine = engine.into();
    let burnin = burnin_for(run.schedule.burnin_iters, completed);
    let (_, trace) = run.into_parts();
    EngineRun {
        engine: engine.into(),
        trace,
        burnin,
        manifest: m,
        error,
        fit,
    }
}

fn example1(cfg: &ExperimentConfig) -> Result<Vec<EngineRun>> {
    let data = example1_data(cfg)?;
    let seed = cfg.seed();
    let mut runs = Vec::new();
    for engine in cfg.engines()? {
        match engine {
            EngineChoice::Cavi => {
                let model = Model1::new(data.clone())?;
                let init = model.default_init();
                let limit = Limit::resolve(cfg, None, cfg.cavi.max_sweeps);
                let result = match cfg.iters {
                    Some(n) => run_cavi_sweeps(&model, init, n).map(|(_, t)| t),
                    None => run_cavi(&model, init, cfg.cavi.rel_tol, cfg.cavi.max_sweeps).map(|o| o.trace),
                };
                let (trace, error) = match result {
                    Ok(t) => (t, None),
                    Err(e) => (e.trace().cloned().unwrap_or_default(), Some(e.to_string())),
                };
                // the summary is the final sweep
                let burnin = trace.len().saturating_sub(1);
                let completed = trace.len();
                runs.push(EngineRun {
                    engine: "cavi".into(),
                    trace,
                    burnin,
                    manifest: manifest("cavi", seed, None, limit, completed, 2),
                    error,
                    fit: None,
                });
            }
            EngineChoice::McCavi => {
                let model = Model1::new(data.clone())?.with_tau_update(TauUpdate::MonteCarlo);
                let schedule = cfg.schedule_or("10,10,1000")?;
                let limit = Limit::resolve(cfg, cfg.mc_cavi.iters, schedule.burnin_iters + cfg.sweep.tail);
                let init = model.default_init();
                let (run, error) = drive_mc_cavi(
                    &model,
                    init,
                    schedule,
                    cfg.mc_cavi.warm_start,
                    limit,
                    RngHandle::new(seed).child(2),
                    |_, _| {},
                );
                runs.push(mc_cavi_record("mc-cavi", cfg, run, error, limit, None));
            }
            e => return Err(Error::Config(format!("engine {e} is not available for example1"))),
        }
    }
    Ok(runs)
}

fn example2(cfg: &ExperimentConfig) -> Result<Vec<EngineRun>> {
    let y = example2_data(cfg)?;
    let n = y.len();
    let seed = cfg.seed();
    let x: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let mut runs = Vec::new();
    for engine in cfg.engines()? {
        match engine {
            EngineChoice::Mcmc => {
                let limit = Limit::resolve(cfg, cfg.mcmc.iters, 2500);
                let burnin_cfg = cfg.mcmc.burnin.unwrap_or(1250);
                let conds = mcmc_conditionals(&y)?;
                let layout = McmcLayout { n };
                let mut curves = Vec::new();
                let start = Instant::now();
                let result = run_mcmc(
                    mcmc_initial_chain(n),
                    &conds,
                    limit.max_iters(),
                    burnin_cfg,
                    &mut RngHandle::new(seed).child(1),
                    |v| vec![("vartheta".into(), v[0]), ("theta".into(), v[1])],
                    |_, v| {
                        curves.push((0..n).map(|j| v[0] + v[layout.kappa(j)]).collect());
                        limit.more(curves.len(), &start)
                    },
                );
                let (trace, error) = match result {
                    Ok(o) => (o.trace, None),
                    Err(e) => (e.trace().cloned().unwrap_or_default(), Some(e.to_string())),
                };
                let completed = trace.len();
                runs.push(EngineRun {
                    engine: "mcmc".into(),
                    burnin: burnin_for(burnin_cfg, completed),
                    manifest: manifest("mcmc", seed, None, limit, completed, layout.dim()),
                    trace,
                    error,
                    fit: Some(Fit {
                        x: x.clone(),
                        data: y.clone(),
                        curves,
                    }),
                });
            }
            EngineChoice::McCavi => {
                let model = Model2::new(y.clone())?;
                let schedule = cfg.schedule_or("10,150,10")?;
                let limit = Limit::resolve(cfg, cfg.mc_cavi.iters, 300);
                let mut curves = Vec::new();
                let (run, error) = drive_mc_cavi(
                    &model,
                    model.initial_state(),
                    schedule,
                    cfg.mc_cavi.warm_start,
                    limit,
                    RngHandle::new(seed).child(2),
                    |m, s| {
                        if let Ok(c) = m.fitted_curve(s) {
                            curves.push(c);
                        }
                    },
                );
                let fit = Fit {
                    x: x.clone(),
                    data: y.clone(),
                    curves,
                };
                runs.push(mc_cavi_record("mc-cavi", cfg, run, error, limit, Some(fit)));
            }
            EngineChoice::Bbvi => {
                let model = Model2Bbvi::new(y.clone())?;
                let limit = Limit::resolve(cfg, cfg.bbvi.iters, 100);
                let options = BbviOptions {
                    iters: limit.max_iters(),
                    samples: cfg.bbvi.samples,
                    eta: cfg.bbvi.eta,
                    control_variate: cfg.bbvi.control_variate,
                };
                let budget = match limit {
                    Limit::Budget(b) => b,
                    Limit::Iters(_) => f64::INFINITY,
                };
                let result = run_bbvi_until(
                    &model,
                    model.initial_lambda(),
                    options,
                    &mut RngHandle::new(seed).child(3),
                    |t| t >= budget,
                );
                let (trace, error) = match result {
                    Ok(o) => (o.trace, None),
                    Err(e) => (e.trace().cloned().unwrap_or_default(), Some(e.to_string())),
                };
                let completed = trace.len();
                runs.push(EngineRun {
                    engine: "bbvi".into(),
                    trace,
                    burnin: 0,
                    manifest: manifest("bbvi", seed, None, limit, completed, model.factor_count()),
                    error,
                    fit: None,
                });
            }
            e => return Err(Error::Config(format!("engine {e} is not available for example2"))),
        }
    }
    Ok(runs)
}

fn nmr(cfg: &ExperimentConfig) -> Result<Vec<EngineRun>> {
    let fixture = nmr_fixture(cfg)?;
    let model = NmrModel::new(&fixture.spectrum, fixture.templates.clone())?.with_theta_shape(cfg.nmr.theta_shape);
    let seed = cfg.seed();
    let obs = model.observed();
    let x = fixture.spectrum.x.clone();
    let data = fixture.spectrum.y.clone();
    let mut runs = Vec::new();
    for engine in cfg.engines()? {
        match engine {
            EngineChoice::McCavi => {
                let schedule = cfg.schedule_or("10,250,10")?;
                let limit = Limit::resolve(cfg, cfg.mc_cavi.iters, 500);
                let mut curves = Vec::new();
                let (run, error) = drive_mc_cavi(
                    &model,
                    model.initial_state(),
                    schedule,
                    cfg.mc_cavi.warm_start,
                    limit,
                    RngHandle::new(seed).child(2),
                    |m, s| {
                        if let Ok(mut c) = m.fitted_spectrum(s) {
                            c.truncate(obs);
                            curves.push(c);
                        }
                    },
                );
                let fit = Fit {
                    x: x.clone(),
                    data: data.clone(),
                    curves,
                };
                runs.push(mc_cavi_record("mc-cavi", cfg, run, error, limit, Some(fit)));
            }
            EngineChoice::Mcmc => {
                let limit = Limit::resolve(cfg, cfg.mcmc.iters, 2000);
                let burnin_cfg = cfg.mcmc.burnin.unwrap_or(1000);
                let mut chain = NmrMcmc::new(&model, burnin_cfg, RngHandle::new(seed).child(1));
                let mut curves = Vec::new();
                let mut error = None;
                let start = Instant::now();
                while limit.more(chain.sweeps, &start) {
                    if let Err(e) = chain.step() {
                        error = Some(e.to_string());
                        break;
                    }
                    match chain.fitted_spectrum() {
                        Ok(mut c) => {
                            c.truncate(obs);
                            curves.push(c);
                        }
                        Err(e) => {
                            error = Some(e.to_string());
                            break;
                        }
                    }
                }
                let completed = chain.sweeps;
                runs.push(EngineRun {
                    engine: "mcmc".into(),
                    burnin: burnin_for(burnin_cfg, completed),
                    manifest: manifest("mcmc", seed, None, limit, completed, 4),
                    trace: chain.trace,
                    error,
                    fit: Some(Fit {
                        x: x.clone(),
                        data: data.clone(),
                        curves,
                    }),
                });
            }
            e => return Err(Error::Config(format!("engine {e} is not available for nmr"))),
        }
    }
    Ok(runs)
}

/// Median over replicates of `|E(tau) - E_cavi(tau)|` after a fixed number
/// of MC-CAVI sweeps, for each inner sample size.
fn theorem1_sweep(cfg: &ExperimentConfig, bundle: &mut ReportBundle) -> Result<Table> {
    let data = example1_data(cfg)?;
    let exact = Model1::new(data.clone())?;
    let cavi = run_cavi(&exact, exact.default_init(), cfg.cavi.rel_tol, cfg.cavi.max_sweeps)?;
    let target = cavi.state.moment(model1::TAU, "E(tau)")?;
    let model = Model1::new(data)?.with_tau_update(TauUpdate::MonteCarlo);
    let s = &cfg.sweep;
    let iters = cfg.iters.unwrap_or(s.iters);
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &n in &s.sample_sizes {
        let schedule = McSchedule::constant(n, s.adapt_iters.min(iters))?;
        let mut errs = Vec::with_capacity(s.replicates);
        for r in 0..s.replicates {
            let rng = RngHandle::new(cfg.seed()).child(100 + r as u64);
            let (run, error) = drive_mc_cavi(&model, model.default_init(), schedule, true, Limit::Iters(iters), rng, |_, _| {});
            if let Some(e) = error {
                errors.push(format!("N = {n}, replicate {r}: {e}"));
                continue;
            }
            match run.trace.last("E(tau)") {
                Some(v) => errs.push((v - target).abs()),
                None => errors.push(format!("N = {n}, replicate {r}: empty trace")),
            }
        }
        if errs.is_empty() {
            continue;
        }
        let mut row = vec![n as f64, quantile(&errs, 0.5)];
        row.extend(errs);
        rows.push(row);
    }
    let mut header = vec!["N".to_string(), "median_abs_error".to_string()];
    header.extend((1..=s.replicates).map(|r| format!("replicate{r}")));
    if !rows.is_empty() {
        LineChart::new("MC-CAVI error against CAVI", "log10 N", "log10 median |E(tau) - E_cavi(tau)|")
            .series(
                "median",
                rows.iter().map(|r| r[0].log10()).collect(),
                rows.iter().map(|r| r[1].max(f64::MIN_POSITIVE).log10()).collect(),
            )
            .save(&cfg.out.join("theorem1.svg"))?;
        bundle.plots.push("theorem1.svg".into());
    }
    bundle.errors.extend(errors);
    // rows may have fewer replicate columns after failures; pad for CSV shape
    let width = header.len();
    for r in &mut rows {
        r.resize(width, f64::NAN);
    }
    Ok(Table {
        name: "theorem1".into(),
        header,
        rows,
    })
}

/// Runs each A-B-C schedule for `B + tail` sweeps; the summary of each run is
/// the mean over its post-burn-in sweeps.
fn schedule_sweep(cfg: &ExperimentConfig) -> Result<(Vec<EngineRun>, Table)> {
    let data = example1_data(cfg)?;
    let model = Model1::new(data)?.with_tau_update(TauUpdate::MonteCarlo);
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for (k, text) in cfg.sweep.schedules.iter().enumerate() {
        let schedule = McSchedule::parse(text)?;
        let limit = match (cfg.budget_secs, cfg.iters) {
            (Some(b), _) => Limit::Budget(b),
            (None, Some(n)) => Limit::Iters(n),
            (None, None) => Limit::Iters(schedule.burnin_iters + cfg.sweep.tail),
        };
        let start = Instant::now();
        let rng = RngHandle::new(cfg.seed()).child(10 + k as u64);
        let (run, error) = drive_mc_cavi(&model, model.default_init(), schedule, cfg.mc_cavi.warm_start, limit, rng, |_, _| {});
        let secs = start.elapsed().as_secs_f64();
        let engine = format!("mc-cavi[{}-{}-{}]", schedule.burnin_n, schedule.burnin_iters, schedule.main_n);
        let record = mc_cavi_record(&engine, cfg, run, error, limit, None);
        let tail = record.trace.column("E(tau)").unwrap_or_default();
        let tail = &tail[record.burnin.min(tail.len())..];
        let mean = if tail.is_empty() {
            f64::NAN
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        };
        rows.push(vec![
            schedule.burnin_n as f64,
            schedule.burnin_iters as f64,
            schedule.main_n as f64,
            mean,
            secs,
        ]);
        runs.push(record);
    }
    let table = Table {
        name: "schedules".into(),
        header: ["A", "B", "C", "E(tau)", "secs"].map(String::from).to_vec(),
        rows,
    };
    Ok((runs, table))
}
