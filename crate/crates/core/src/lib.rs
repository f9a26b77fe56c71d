//! Variational inference engines: coordinate ascent (CAVI), Monte Carlo
//! coordinate ascent (MC-CAVI), black-box VI with Rao-Blackwellized,
//! control-variate gradients, and Metropolis-within-Gibbs MCMC baselines.
//!
//! The [`models`] module carries three benchmark models: a semi-conjugate
//! normal model, a normal model with hard constraints |κ_j| < ψ_j < 2, and a
//! Bayesian NMR spectral-deconvolution model with Lorentzian templates and a
//! symlet-6 wavelet residual.

pub mod bbvi;
pub mod error;
pub mod harness;
pub mod mc_cavi;
pub mod mcmc;
pub mod models;
pub mod stats;
pub mod vi;

pub use error::{Error, Result};
