//! Black-box VI on the constrained regression model, with and without
//! control variates.
//!
//! Run with `cargo run --release --example bbvi_model2`.

use mccavi::bbvi::{run_bbvi, BbviModel, BbviOptions};
use mccavi::harness::mean_sd;
use mccavi::models::model2::{self, Model2Bbvi, Truth};
use mccavi::stats::RngHandle;

fn main() -> mccavi::Result<()> {
    let y = model2::generate(100, Truth::default(), &mut RngHandle::new(43));
    let model = Model2Bbvi::new(y)?;
    for control_variate in [true, false] {
        let options = BbviOptions {
            control_variate,
            ..BbviOptions::default()
        };
        let out = run_bbvi(&model, model.initial_lambda(), options, &mut RngHandle::new(43).child(3))?;
        let col = out.trace.column("vartheta").unwrap();
        let (m, sd) = mean_sd(&col[col.len() / 2..]);
        println!("control variates {control_variate}: E(vartheta) {m:.4}, trace sd {sd:.4}");
        println!("  final q(vartheta) parameters {:?}", out.lambda[0]);
    }
    Ok(())
}
