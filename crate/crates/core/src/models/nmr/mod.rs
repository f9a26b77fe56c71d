//! Bayesian deconvolution of a 1-D NMR spectrum into metabolite templates
//! plus a wavelet-represented residual.
//!
//! The observation model is `y = T(gamma, delta) beta + W^-1 vartheta + noise`
//! with an orthonormal wavelet transform `W`, shrinkage weights `psi` on the
//! wavelet coefficients and truncation limits `tau` that keep the residual
//! `W^-1 vartheta` from dipping below a small negative threshold.

mod fixture;
mod mcmc;
mod model;
mod spectrum;
mod template;
mod wavelet;

pub use fixture::{fixture_templates, generate_fixture, NmrFixture, NmrTruth, FIXTURE_GAMMA, FIXTURE_NOISE_PRECISION};
pub use mcmc::{run_nmr_mcmc, NmrMcmc, NmrMcmcOutcome};
pub use model::{NmrModel, NmrPriors, PeakKernel, ThetaShape, WaveletKernel, PEAKS, PSI, THETA, WAVELETS};
pub use spectrum::{load_catalog, save_catalog, Catalog, Spectrum};
pub use template::{catalogue_centers, lorentzian, mat_vec, template_matrix, MetaboliteTemplate, Multiplet};
pub use wavelet::{Wavelet, DEFAULT_LEVELS, SYM6_DEC_LO};
