//! Densities, moments and sampling of the distribution layer.
//!
//! Run with `cargo run --example distributions`.

use mccavi::stats::{truncated_normal_moments, Distribution, RngHandle};

fn main() -> mccavi::Result<()> {
    let mut rng = RngHandle::new(1);
    let dists = [
        Distribution::normal(5.0, 4.0)?,
        Distribution::gamma(3.0, 2.0)?,
        Distribution::truncated_normal(0.0, 10.0, -2.0, 2.0)?,
        Distribution::log_normal(0.0, 0.25)?,
        Distribution::uniform(-1.0, 3.0)?,
    ];
    for d in &dists {
        let k = 100_000;
        let m = (0..k).map(|_| d.sample(&mut rng)).sum::<f64>() / k as f64;
        println!("{d:?}: mean {:.4}, sample mean {m:.4}, log pdf at mean {:.4}", d.mean(), d.log_pdf(d.mean()));
    }
    let (m, v) = truncated_normal_moments(0.0, 1.0, 0.0, f64::INFINITY)?;
    println!("half-normal mean {m:.6}, variance {v:.6}");
    Ok(())
}
