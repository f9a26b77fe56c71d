use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mccavi::harness::{
    emit_fit_plot, pointwise_band, rerender, run_experiment, summarize_trace, write_fixtures, EngineChoice, Experiment,
    ExperimentConfig,
};
use mccavi::models::model2::Truth;
use mccavi::vi::SweepTrace;

fn trace_of(col: &[f64]) -> SweepTrace {
    let mut t = SweepTrace::default();
    for v in col {
        t.push(&[("x".to_string(), *v)], None, 0.0);
    }
    t
}

#[test]
fn summary_examples() {
    let s = summarize_trace(&trace_of(&[3.0; 7]), 2).unwrap();
    assert_eq!((s[0].mean, s[0].sd), (3.0, 0.0));
    let ten: Vec<f64> = (1..=10).map(f64::from).collect();
    let s = summarize_trace(&trace_of(&ten), 5).unwrap();
    assert_eq!(s[0].mean, 8.0);
    assert!((s[0].sd - 2.5f64.sqrt()).abs() < 1e-15);
    let s = summarize_trace(&trace_of(&ten), 9).unwrap();
    assert_eq!((s[0].mean, s[0].sd), (10.0, 0.0));
    assert!(summarize_trace(&trace_of(&ten), 10).is_err());
}

#[test]
fn constant_fit_band_collapses_and_svg_parses() {
    let curves = vec![vec![1.0, 2.0, 3.0]; 20];
    let (mean, lo, hi) = pointwise_band(&curves).unwrap();
    assert_eq!(mean, lo);
    assert_eq!(mean, hi);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fit.svg");
    emit_fit_plot(&path, "constant & <fit>", &[0.0, 1.0, 2.0], &[1.1, 1.9, 3.2], &mean, &lo, &hi).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
}

fn config(experiment: Experiment, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn example2_bundle_is_complete_and_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Experiment::Example2, dir.path());
    let bundle = run_experiment(&cfg).unwrap();
    assert!(!bundle.failed, "{:?}", bundle.failures());
    for engine in ["mcmc", "mc-cavi", "bbvi"] {
        let run = bundle.run(engine).unwrap();
        assert!(bundle.summary(engine, "vartheta").is_some());
        assert!(bundle.summary(engine, "theta").is_some());
        let trace = bundle.load_trace(engine).unwrap();
        assert_eq!(summarize_trace(&trace, run.burnin).unwrap(), run.summary);
    }
    for plot in &bundle.plots {
        let text = std::fs::read_to_string(dir.path().join(plot)).unwrap();
        roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{plot}: {e}"));
    }
    let again = rerender(dir.path()).unwrap();
    for engine in ["mcmc", "mc-cavi", "bbvi"] {
        assert_eq!(again.run(engine).unwrap().summary, bundle.run(engine).unwrap().summary);
    }
}

#[test]
fn mcmc_band_covers_the_generating_curve() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Example2, dir.path());
    cfg.engine = EngineChoice::Mcmc;
    run_experiment(&cfg).unwrap();
    let mut r = csv::Reader::from_path(dir.path().join("mcmc_fit.csv")).unwrap();
    let rows: Vec<Vec<f64>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    let truth = Truth::default().curve(rows.len());
    let covered = rows
        .iter()
        .zip(&truth)
        .filter(|(row, t)| row[3] <= **t && **t <= row[4])
        .count();
    assert!(covered as f64 >= 0.9 * rows.len() as f64, "band covers {covered} of {}", rows.len());
}

#[test]
fn identical_configs_give_identical_csvs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for exp in [Experiment::Example1, Experiment::Example2] {
        run_experiment(&config(exp, a.path())).unwrap();
        let bundle = run_experiment(&config(exp, b.path())).unwrap();
        for run in &bundle.runs {
            let x = std::fs::read(a.path().join(&run.trace_file)).unwrap();
            let y = std::fs::read(b.path().join(&run.trace_file)).unwrap();
            assert_eq!(x, y, "{exp} {}", run.engine);
        }
    }
}

#[test]
fn zero_iterations_flag_failure_without_crashing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Example2, dir.path());
    cfg.iters = Some(0);
    let bundle = run_experiment(&cfg).unwrap();
    assert!(bundle.failed);
    assert_eq!(bundle.runs.len(), 3);
    for run in &bundle.runs {
        assert!(run.error.is_some());
        assert!(bundle.load_trace(&run.engine).unwrap().is_empty());
    }
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn budget_stops_every_engine_near_the_limit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Example2, dir.path());
    cfg.budget_secs = Some(0.2);
    let start = Instant::now();
    let bundle = run_experiment(&cfg).unwrap();
    let total = start.elapsed().as_secs_f64();
    assert!(!bundle.failed, "{:?}", bundle.failures());
    // three engines; single sweeps here take milliseconds
    assert!(total < 3.0 * 0.2 + 0.5, "took {total}s");
    for run in &bundle.runs {
        assert!(run.manifest.completed_iters > 0);
        assert_eq!(run.manifest.requested_iters, 0);
    }
}

#[test]
fn fixtures_reproduce_the_default_datasets() {
    let fx = tempfile::tempdir().unwrap();
    write_fixtures(fx.path(), None).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut with = config(Experiment::Example1, a.path());
    with.fixtures = Some(fx.path().to_path_buf());
    let x = run_experiment(&with).unwrap();
    let y = run_experiment(&config(Experiment::Example1, b.path())).unwrap();
    for engine in ["cavi", "mc-cavi"] {
        assert_eq!(x.run(engine).unwrap().summary, y.run(engine).unwrap().summary);
    }
}

#[test]
fn schedule_sweep_reports_one_row_per_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = run_experiment(&config(Experiment::ScheduleSweep, dir.path())).unwrap();
    let table = bundle.table.as_ref().unwrap();
    assert_eq!(table.rows.len(), 5);
    assert_eq!(bundle.runs.len(), 5);
    assert!(dir.path().join("schedules.csv").exists());
}

fn cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_mccavi"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();
    assert_eq!(cli(&["run", "--experiment", "example1", "--out", out]), 0);
    assert_eq!(cli(&["report", out]), 0);
    assert_eq!(cli(&["run", "--experiment", "example9", "--out", out]), 1);
    assert_eq!(cli(&["run", "--experiment", "example1", "--engine", "bbvi", "--out", out]), 1);
    assert_eq!(cli(&["run", "--experiment", "example1", "--iters", "3", "--budget-secs", "1", "--out", out]), 1);
    assert_eq!(cli(&["run", "--experiment", "example1", "--schedule", "10,x,5", "--out", out]), 1);
    assert_eq!(cli(&["run", "--experiment", "example2", "--iters", "0", "--out", out]), 2);
    let missing = dir.path().join("nope");
    assert_eq!(cli(&["report", missing.to_str().unwrap()]), 3);
    let fx = dir.path().join("fx");
    assert_eq!(cli(&["gen-fixtures", "--out", fx.to_str().unwrap()]), 0);
    assert_eq!(
        cli(&["run", "--experiment", "example2", "--engine", "mc-cavi", "--fixtures", fx.to_str().unwrap(), "--out", out]),
        0
    );
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "experiment = \"example1\"\n[cavi]\nrel_tol = 1e-6\n").unwrap();
    assert_eq!(cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out]), 0);
    std::fs::write(&cfg, "experiment = \"example1\"\nbogus = 3\n").unwrap();
    assert_eq!(cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out]), 1);
}
