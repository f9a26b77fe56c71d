//! MC-CAVI on the normal model with the precision block estimated by
//! sampling, under several A-B-C sample-size schedules.
//!
//! Run with `cargo run --release --example mc_cavi_schedules`.

use mccavi::harness::DEFAULT_SCHEDULES;
use mccavi::mc_cavi::{run_mc_cavi, McSchedule};
use mccavi::models::model1::{self, Model1, TauUpdate};
use mccavi::stats::RngHandle;
use mccavi::vi::run_cavi;

fn main() -> mccavi::Result<()> {
    let x = model1::generate(1000, &mut RngHandle::new(18733));
    let exact = Model1::new(x.clone())?;
    let cavi = run_cavi(&exact, exact.default_init(), 1e-10, 100)?;
    println!("CAVI E(tau) = {:.6}", cavi.state.moment(model1::TAU, "E(tau)")?);

    let model = Model1::new(x)?.with_tau_update(TauUpdate::MonteCarlo);
    println!("{:>20} {:>10}", "schedule", "E(tau)");
    for (k, &(a, b, c)) in DEFAULT_SCHEDULES.iter().enumerate() {
        let schedule = McSchedule::new(a, b, c)?;
        let (_, trace) = run_mc_cavi(&model, model.default_init(), schedule, b + 10, RngHandle::new(k as u64))?;
        let est = trace.tail_mean("E(tau)", 10).unwrap();
        println!("{:>20} {est:>10.6}", schedule.to_string());
    }
    Ok(())
}
