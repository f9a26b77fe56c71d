//! Periodized symlet-6 transform: round trip and energy preservation.
//!
//! Run with `cargo run --example wavelet_transform`.

use mccavi::models::nmr::Wavelet;
use mccavi::stats::RngHandle;

fn main() -> mccavi::Result<()> {
    let w = Wavelet::sym6(512, 4)?;
    let mut rng = RngHandle::new(6);
    let x: Vec<f64> = (0..512).map(|i| (i as f64 / 20.0).sin() + 0.1 * rng.standard_normal()).collect();
    let c = w.forward(&x)?;
    let back = w.inverse(&c)?;
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ex: f64 = x.iter().map(|v| v * v).sum();
    let ec: f64 = c.iter().map(|v| v * v).sum();
    println!("max round-trip error {err:.2e}, energy {ex:.6} vs {ec:.6}");
    let big = c.iter().filter(|v| v.abs() > 0.5).count();
    println!("{big} of {} coefficients exceed 0.5 in magnitude", c.len());
    Ok(())
}
