//! Benchmark models: a semi-conjugate normal model, a normal model with
//! hard constraints, and Bayesian NMR spectral deconvolution.

pub mod model1;
pub mod model2;
pub mod nmr;
