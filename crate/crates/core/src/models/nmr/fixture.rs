use std::path::Path;

use super::spectrum::{load_catalog, save_catalog, Spectrum};
use super::template::{mat_vec, template_matrix, MetaboliteTemplate, Multiplet};
use crate::error::{Error, Result};
use crate::stats::RngHandle;

/// Peak width of the synthetic spectrum (ppm).
pub const FIXTURE_GAMMA: f64 = 0.005;
/// Noise precision on the raw scale, where the tallest point of the
/// noise-free spectrum is 1.
pub const FIXTURE_NOISE_PRECISION: f64 = 1e4;

const GRID_POINTS: usize = 512;
const GRID_RANGE: (f64, f64) = (1.0, 4.0);
const RAW_BETA: [f64; 2] = [1.0, 0.6];
/// Actual multiplet centers; the catalogue lists rounded estimates.
const TRUE_CENTERS: [f64; 4] = [1.478, 3.783, 3.027, 3.932];
const BUMP: (f64, f64, f64) = (2.4, 0.25, 2.0);

/// Generating parameters on the scale of the normalized spectrum.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NmrTruth {
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub centers: Vec<f64>,
    pub noise_precision: f64,
    /// Factor the raw intensities were divided by.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct NmrFixture {
    pub spectrum: Spectrum,
    pub templates: Vec<MetaboliteTemplate>,
    pub truth: NmrTruth,
}

fn singlet(center: f64, protons: f64) -> Multiplet {
    Multiplet {
        center,
        protons,
        peaks: vec![(0.0, 1.0)],
    }
}

/// Two-metabolite catalogue: a doublet plus a quartet, and two singlets.
pub fn fixture_templates() -> Vec<MetaboliteTemplate> {
    let j = 0.0072;
    vec![
        MetaboliteTemplate {
            name: "alanine".into(),
            multiplets: vec![
                Multiplet {
                    center: 1.48,
                    protons: 3.0,
                    peaks: vec![(-j / 2.0, 0.5), (j / 2.0, 0.5)],
                },
                Multiplet {
                    center: 3.78,
                    protons: 1.0,
                    peaks: vec![
                        (-1.5 * j, 0.125),
                        (-0.5 * j, 0.375),
                        (0.5 * j, 0.375),
                        (1.5 * j, 0.125),
                    ],
                },
            ],
        },
        MetaboliteTemplate {
            name: "creatine".into(),
            multiplets: vec![singlet(3.03, 3.0), singlet(3.93, 2.0)],
        },
    ]
}

/// Synthetic spectrum on 512 points over [1, 4] ppm: the two catalogue
/// metabolites at shifted centers, a broad Gaussian bump no template
/// explains, and white noise of precision [`FIXTURE_NOISE_PRECISION`] on
/// the peak-height scale, normalized to unit sum.
pub fn generate_fixture(rng: &mut RngHandle) -> Result<NmrFixture> {
    let templates = fixture_templates();
    let (lo, hi) = GRID_RANGE;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let x: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let cols = template_matrix(&templates, FIXTURE_GAMMA, &TRUE_CENTERS, &x);
    let mut clean = mat_vec(&cols, &RAW_BETA);
    let (bc, bs, area) = BUMP;
    for (c, xi) in clean.iter_mut().zip(&x) {
        let z = (xi - bc) / bs;
        *c += area * (-0.5 * z * z).exp() / (bs * (2.0 * std::f64::consts::PI).sqrt());
    }
    let peak = clean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sd = FIXTURE_NOISE_PRECISION.sqrt().recip();
    let raw: Vec<f64> = clean.iter().map(|c| c / peak + sd * rng.standard_normal()).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(format!("noisy fixture sums to {total}")));
    }
    let scale = peak * total;
    let truth = NmrTruth {
        beta: RAW_BETA.iter().map(|b| b / scale).collect(),
        gamma: FIXTURE_GAMMA,
        centers: TRUE_CENTERS.to_vec(),
        noise_precision: FIXTURE_NOISE_PRECISION * total * total,
        scale,
    };
    Ok(NmrFixture {
        spectrum: Spectrum::new(x, raw)?,
        templates,
        truth,
    })
}

impl NmrFixture {
    pub const SPECTRUM_FILE: &'static str = "spectrum.txt";
    pub const CATALOG_FILE: &'static str = "catalog.toml";
    pub const TRUTH_FILE: &'static str = "truth.toml";

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.spectrum.save(&dir.join(Self::SPECTRUM_FILE))?;
        save_catalog(&dir.join(Self::CATALOG_FILE), &self.templates)?;
        let truth = toml::to_string(&self.truth).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join(Self::TRUTH_FILE), truth)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let spectrum = Spectrum::load(&dir.join(Self::SPECTRUM_FILE))?;
        let templates = load_catalog(&dir.join(Self::CATALOG_FILE))?;
        let path = dir.join(Self::TRUTH_FILE);
        let truth = toml::from_str(&std::fs::read_to_string(&path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Ok(Self {
            spectrum,
            templates,
            truth,
        })
    }
}
