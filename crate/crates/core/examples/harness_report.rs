//! Runs an experiment through the harness and prints the report table. The
//! bundle (traces, manifests, SVG plots) lands in the given directory.
//!
//! Run with `cargo run --release --example harness_report -- example2 out/example2`.

use std::path::PathBuf;

use mccavi::harness::{run_experiment, rerender, ExperimentConfig};

fn main() -> mccavi::Result<()> {
    let mut args = std::env::args().skip(1);
    let experiment = args.next().unwrap_or_else(|| "example2".into()).parse()?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out").join("report"));
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.out = out.clone();
    let bundle = run_experiment(&cfg)?;
    print!("{}", bundle.table_text());
    if bundle.failed {
        eprintln!("failures: {:?}", bundle.failures());
    }
    // summaries can be rebuilt from the files alone
    let again = rerender(&out)?;
    println!("re-rendered {} runs from {}", again.runs.len(), out.display());
    Ok(())
}
