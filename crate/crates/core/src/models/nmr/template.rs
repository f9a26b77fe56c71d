use crate::error::{Error, Result};

/// Standardized Lorentzian `(2/pi) * gamma / (4 x^2 + gamma^2)`: unit area,
/// full width `gamma` at half height.
pub fn lorentzian(x: f64, gamma: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * gamma / (4.0 * x * x + gamma * gamma)
}

/// One symmetric cluster of peaks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Multiplet {
    /// Catalogue estimate of the center (ppm).
    pub center: f64,
    pub protons: f64,
    /// `(offset from the center in ppm, relative weight)` per peak.
    pub peaks: Vec<(f64, f64)>,
}

impl Multiplet {
    pub fn validate(&self) -> Result<()> {
        if self.peaks.is_empty() {
            return Err(Error::InvalidParameter("multiplet needs at least one peak".into()));
        }
        if !(self.protons > 0.0) {
            return Err(Error::InvalidParameter(format!("proton count {} must be positive", self.protons)));
        }
        if self.peaks.iter().any(|(_, w)| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("peak weights must be non-negative".into()));
        }
        let total: f64 = self.peaks.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("peak weights sum to {total}, not 1")));
        }
        let mut offsets: Vec<f64> = self.peaks.iter().map(|(o, _)| *o).collect();
        offsets.sort_by(f64::total_cmp);
        let v = offsets.len();
        if (0..v).any(|k| (offsets[k] + offsets[v - 1 - k]).abs() > 1e-12) {
            return Err(Error::InvalidParameter("peak offsets must be symmetric around 0".into()));
        }
        Ok(())
    }

    /// Contribution `z * sum_v w_v * l_gamma(x - center - c_v)` at `x` for a
    /// given center.
    pub fn eval(&self, x: f64, center: f64, gamma: f64) -> f64 {
        self.protons
            * self
                .peaks
                .iter()
                .map(|(c, w)| w * lorentzian(x - center - c, gamma))
                .sum::<f64>()
    }
}

/// Catalogue signature of one metabolite.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetaboliteTemplate {
    pub name: String,
    #[serde(rename = "multiplet")]
    pub multiplets: Vec<Multiplet>,
}

impl MetaboliteTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.multiplets.is_empty() {
            return Err(Error::InvalidParameter(format!("metabolite {} has no multiplets", self.name)));
        }
        self.multiplets.iter().try_for_each(Multiplet::validate)
    }
}

/// Catalogue centers of every multiplet, metabolite-major.
pub fn catalogue_centers(templates: &[MetaboliteTemplate]) -> Vec<f64> {
    templates
        .iter()
        .flat_map(|t| t.multiplets.iter().map(|m| m.center))
        .collect()
}

/// Template matrix as columns: entry `(i, m)` is `t_m(grid[i])` with peak
/// width `gamma` and multiplet centers `centers` (metabolite-major, as in
/// [`catalogue_centers`]).
pub fn template_matrix(templates: &[MetaboliteTemplate], gamma: f64, centers: &[f64], grid: &[f64]) -> Vec<Vec<f64>> {
    let mut k = 0;
    templates
        .iter()
        .map(|t| {
            let mut col = vec![0.0; grid.len()];
            for mult in &t.multiplets {
                let c = centers[k];
                k += 1;
                for (v, x) in col.iter_mut().zip(grid) {
                    *v += mult.eval(*x, c, gamma);
                }
            }
            col
        })
        .collect()
}

/// `T beta` for column-stored `T`.
pub fn mat_vec(columns: &[Vec<f64>], beta: &[f64]) -> Vec<f64> {
    let n = columns.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (col, b) in columns.iter().zip(beta) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += b * v;
        }
    }
    out
}
