use std::fmt::Write as _;
use std::path::Path;

use super::template::MetaboliteTemplate;
use crate::error::{Error, Result};

/// Ordered chemical-shift grid with intensities scaled to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Spectrum {
    /// Validates the grid and rescales `y` to unit sum.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "spectrum needs matching non-empty columns, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("chemical-shift grid must be strictly increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("intensities must be finite".into()));
        }
        let total: f64 = y.iter().sum();
        if !(total.abs() > 1e-300) {
            return Err(Error::InvalidParameter("intensities sum to zero and cannot be normalized".into()));
        }
        let y = y.into_iter().map(|v| v / total).collect();
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Parses whitespace-separated `(ppm, intensity)` rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two columns, got {}", k + 1, fields.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", k + 1)))
            };
            x.push(num(fields[0])?);
            y.push(num(fields[1])?);
        }
        Self::new(x, y)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# ppm intensity\n");
        for (x, y) in self.x.iter().zip(&self.y) {
            writeln!(out, "{x:?} {y:?}").expect("writing to a string");
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Metabolite catalogue as stored on disk.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Catalog {
    pub metabolite: Vec<MetaboliteTemplate>,
}

pub fn load_catalog(path: &Path) -> Result<Vec<MetaboliteTemplate>> {
    let text = std::fs::read_to_string(path)?;
    let cat: Catalog = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if cat.metabolite.is_empty() {
        return Err(Error::Parse(format!("{}: catalogue lists no metabolites", path.display())));
    }
    cat.metabolite.iter().try_for_each(MetaboliteTemplate::validate)?;
    Ok(cat.metabolite)
}

pub fn save_catalog(path: &Path, templates: &[MetaboliteTemplate]) -> Result<()> {
    let cat = Catalog {
        metabolite: templates.to_vec(),
    };
    let text = toml::to_string(&cat).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
