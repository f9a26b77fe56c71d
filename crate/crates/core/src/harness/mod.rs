//! Experiment configuration, runners and report bundles.
//!
//! A run writes one directory: a trace CSV, a trace chart and (where the
//! model has a fitted curve) a fit chart per engine, plus `summary.csv`,
//! `summary.txt` and `manifest.toml`. Summaries are always computed from the
//! CSVs as written, so [`rerender`] reproduces them exactly.

mod config;
mod experiments;
mod summary;
mod svg;

pub use config::{
    BbviSettings, CaviSettings, EngineChoice, Experiment, ExperimentConfig, McCaviSettings, McmcSettings, NmrSettings,
    SweepSettings, DEFAULT_SCHEDULES,
};
pub use experiments::{load_series, run_experiment, write_fixtures, FIXTURE_EXAMPLE1, FIXTURE_EXAMPLE2, FIXTURE_NMR_DIR};
pub use summary::{mean_sd, pointwise_band, quantile, summarize_trace, ColumnSummary};
pub use svg::{emit_fit_plot, LineChart, Series};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mc_cavi::RunManifest;
use crate::vi::SweepTrace;

/// One engine's part of a bundle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunRecord {
    pub engine: String,
    /// Trace CSV file name inside the bundle directory.
    pub trace_file: String,
    pub burnin: usize,
    pub manifest: RunManifest,
    pub error: Option<String>,
    #[serde(skip)]
    pub summary: Vec<ColumnSummary>,
}

/// A numeric table written as CSV next to the traces.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything a run leaves behind.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReportBundle {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip)]
    pub dir: PathBuf,
    pub runs: Vec<RunRecord>,
    pub plots: Vec<String>,
    pub table: Option<Table>,
    /// Failures not tied to a single run, such as sweep replicates.
    #[serde(default)]
    pub errors: Vec<String>,
    /// True when any engine failed or produced no usable trace.
    pub failed: bool,
}

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

impl ReportBundle {
    pub fn new(experiment: Experiment, seed: u64, dir: &Path) -> Self {
        Self {
            experiment,
            seed,
            dir: dir.to_path_buf(),
            runs: Vec::new(),
            plots: Vec::new(),
            table: None,
            errors: Vec::new(),
            failed: false,
        }
    }

    pub fn run(&self, engine: &str) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.engine == engine)
    }

    /// Post-burn-in summary of `parameter` for `engine`.
    pub fn summary(&self, engine: &str, parameter: &str) -> Option<&ColumnSummary> {
        self.run(engine)?.summary.iter().find(|s| s.parameter == parameter)
    }

    pub fn trace_path(&self, engine: &str) -> Option<PathBuf> {
        self.run(engine).map(|r| self.dir.join(&r.trace_file))
    }

    pub fn load_trace(&self, engine: &str) -> Result<SweepTrace> {
        let path = self
            .trace_path(engine)
            .ok_or_else(|| Error::Config(format!("bundle has no engine {engine}")))?;
        SweepTrace::load_csv(&path)
    }

    pub fn failures(&self) -> Vec<String> {
        self.runs
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.engine)))
            .chain(self.errors.iter().cloned())
            .collect()
    }

    /// Parameters as rows, engines as columns: `mean (sd)`.
    pub fn table_text(&self) -> String {
        let mut params: Vec<&str> = Vec::new();
        for r in &self.runs {
            for s in &r.summary {
                if !params.contains(&s.parameter.as_str()) {
                    params.push(&s.parameter);
                }
            }
        }
        let mut out = String::new();
        let _ = write!(out, "{:<16}", "");
        for r in &self.runs {
            let _ = write!(out, " {:>24}", r.engine);
        }
        out.push('\n');
        for p in params {
            let _ = write!(out, "{p:<16}");
            for r in &self.runs {
                let cell = r
                    .summary
                    .iter()
                    .find(|s| s.parameter == p)
                    .map(|s| format!("{} ({})", fmt_num(s.mean), fmt_num(s.sd)))
                    .unwrap_or_else(|| "-".into());
                let _ = write!(out, " {cell:>24}");
            }
            out.push('\n');
        }
        for f in self.failures() {
            let _ = writeln!(out, "FAILED {f}");
        }
        out
    }

    fn write_summaries(&self) -> Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(SUMMARY_CSV))?;
        w.write_record(["engine", "parameter", "mean", "sd", "burnin"])?;
        for r in &self.runs {
            for s in &r.summary {
                w.write_record([
                    r.engine.clone(),
                    s.parameter.clone(),
                    format!("{:?}", s.mean),
                    format!("{:?}", s.sd),
                    r.burnin.to_string(),
                ])?;
            }
        }
        w.flush()?;
        std::fs::write(self.dir.join(SUMMARY_TXT), self.table_text())?;
        Ok(())
    }

    fn write_manifest(&self) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Recomputes every summary from the trace CSVs and draws the trace
    /// charts. Runs with too few rows are flagged instead of summarized.
    fn finalize(&mut self) -> Result<()> {
        for r in &mut self.runs {
            let trace = SweepTrace::load_csv(&self.dir.join(&r.trace_file))?;
            match summarize_trace(&trace, r.burnin) {
                Ok(s) => r.summary = s,
                Err(e) => {
                    r.summary.clear();
                    if r.error.is_none() {
                        r.error = Some(e.to_string());
                    }
                }
            }
            if !trace.is_empty() {
                let name = format!("{}_trace.svg", file_stem(&r.engine));
                trace_chart(&trace, &r.engine).save(&self.dir.join(&name))?;
                if !self.plots.contains(&name) {
                    self.plots.push(name);
                }
            }
        }
        if let Some(t) = &self.table {
            t.save(&self.dir.join(format!("{}.csv", t.name)))?;
        }
        self.failed = !self.errors.is_empty() || self.runs.iter().any(|r| r.error.is_some());
        self.write_summaries()?;
        self.write_manifest()
    }
}

/// Re-reads a bundle directory, recomputes summaries from its trace CSVs and
/// redraws the trace charts and summary tables.
pub fn rerender(dir: &Path) -> Result<ReportBundle> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)?;
    let mut bundle: ReportBundle =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    bundle.dir = dir.to_path_buf();
    bundle.finalize()?;
    Ok(bundle)
}

pub(crate) fn file_stem(engine: &str) -> String {
    engine
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn trace_chart(trace: &SweepTrace, engine: &str) -> LineChart {
    let mut chart = LineChart::new(&format!("{engine} trace"), "sweep", "value");
    let x: Vec<f64> = (1..=trace.len()).map(|k| k as f64).collect();
    // statistics live on unrelated scales, so the chart shows the first one
    if let Some(first) = trace.columns().first() {
        let col = trace.column(first).unwrap_or_default();
        chart = chart.series(first, x.clone(), col);
    }
    chart
}

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}
