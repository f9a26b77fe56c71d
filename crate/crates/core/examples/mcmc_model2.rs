//! Adaptive Metropolis-within-Gibbs on the constrained regression model.
//!
//! Run with `cargo run --release --example mcmc_model2`.

use mccavi::harness::mean_sd;
use mccavi::mcmc::run_mcmc;
use mccavi::models::model2::{self, mcmc_conditionals, mcmc_initial_chain, Truth};
use mccavi::stats::RngHandle;

fn main() -> mccavi::Result<()> {
    let n = 100;
    let y = model2::generate(n, Truth::default(), &mut RngHandle::new(43));
    let conds = mcmc_conditionals(&y)?;
    let (iters, burnin) = (2500, 1250);
    let out = run_mcmc(
        mcmc_initial_chain(n),
        &conds,
        iters,
        burnin,
        &mut RngHandle::new(43).child(1),
        |v| vec![("vartheta".into(), v[0]), ("theta".into(), v[1])],
        |_, _| true,
    )?;
    for name in ["vartheta", "theta"] {
        let col = out.trace.column(name).unwrap();
        let (m, sd) = mean_sd(&col[burnin..]);
        println!("{name}: mean {m:.4}, sd {sd:.4}");
    }
    // Gibbs coordinates never record a proposal
    let mh: Vec<f64> = (0..out.chain.values.len())
        .filter(|&i| out.chain.proposed[i] > 0)
        .map(|i| out.chain.acceptance_rate(i))
        .collect();
    println!("mean Metropolis acceptance {:.3} over {} coordinates", mh.iter().sum::<f64>() / mh.len() as f64, mh.len());
    Ok(())
}
