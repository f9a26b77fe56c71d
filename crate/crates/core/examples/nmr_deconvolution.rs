//! Metabolite quantification on a synthetic NMR spectrum with MC-CAVI and the
//! MCMC baseline.
//!
//! Run with `cargo run --release --example nmr_deconvolution`.

use mccavi::harness::mean_sd;
use mccavi::mc_cavi::{McCaviRun, McSchedule};
use mccavi::models::nmr::{generate_fixture, run_nmr_mcmc, NmrModel};
use mccavi::stats::RngHandle;
use mccavi::vi::ModelSpec;

fn main() -> mccavi::Result<()> {
    let fixture = generate_fixture(&mut RngHandle::new(2))?;
    let model = NmrModel::new(&fixture.spectrum, fixture.templates.clone())?;
    println!("{} points, metabolites {:?}", model.observed(), model.metabolite_names());

    let mut run = McCaviRun::new(&model, model.initial_state(), McSchedule::new(10, 250, 10)?, RngHandle::new(2).child(2));
    run.run(500)?;
    let mcmc = run_nmr_mcmc(&model, 2000, 1000, RngHandle::new(2).child(1))?;

    for (m, truth) in fixture.truth.beta.iter().enumerate() {
        let name = format!("beta[{}]", m + 1);
        let mc = &run.trace.column(&name).unwrap()[250..];
        let mc_sd = &run.trace.column(&format!("sd({name})")).unwrap()[250..];
        let chain = &mcmc.trace.column(&name).unwrap()[1000..];
        let (a, _) = mean_sd(mc);
        let (s, _) = mean_sd(mc_sd);
        let (b, t) = mean_sd(chain);
        println!("{name}: truth {truth:.4e}  mc-cavi {a:.4e} (sd {s:.2e})  mcmc {b:.4e} (sd {t:.2e})");
    }
    Ok(())
}
