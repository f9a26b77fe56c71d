//! Closed-form CAVI on the normal model with unknown mean and precision.
//!
//! Run with `cargo run --example cavi_example1`.

use mccavi::models::model1::{self, Model1, TAU, VARTHETA};
use mccavi::stats::RngHandle;
use mccavi::vi::run_cavi;

fn main() -> mccavi::Result<()> {
    let x = model1::generate(1000, &mut RngHandle::new(18733));
    let model = Model1::new(x)?;
    let out = run_cavi(&model, model.default_init(), 1e-4, 100)?;
    println!("converged at sweep {}", out.converged_at);
    println!("q(vartheta) = {:?}", out.state.block(VARTHETA).factor.unwrap());
    println!("q(tau)      = {:?}", out.state.block(TAU).factor.unwrap());
    for (k, elbo) in out.trace.elbo().iter().enumerate() {
        if let Some(e) = elbo {
            println!("sweep {}: elbo {e:.4}", k + 1);
        }
    }
    Ok(())
}
