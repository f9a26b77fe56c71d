use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 6] = ["#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#555555"];

/// A named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Minimal line chart: polylines, an optional shaded band and optional
/// scatter points, with axis labels and tick values.
#[derive(Debug, Clone, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// `(x, lower, upper)`.
    pub band: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    pub points: Option<(Vec<f64>, Vec<f64>)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn series(mut self, name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        self.series.push(Series { name: name.into(), x, y });
        self
    }

    pub fn band(mut self, x: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.band = Some((x, lower, upper));
        self
    }

    pub fn points(mut self, x: Vec<f64>, y: Vec<f64>) -> Self {
        self.points = Some((x, y));
        self
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            xs.extend(&s.x);
            ys.extend(&s.y);
        }
        if let Some((x, lo, hi)) = &self.band {
            xs.extend(x);
            ys.extend(lo);
            ys.extend(hi);
        }
        if let Some((x, y)) = &self.points {
            xs.extend(x);
            ys.extend(y);
        }
        let range = |v: &[f64]| {
            let finite = v.iter().filter(|x| x.is_finite());
            let lo = finite.clone().cloned().fold(f64::INFINITY, f64::min);
            let hi = finite.cloned().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        (range(&xs), range(&ys))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let (ml, mr, mt, mb) = MARGIN;
        let pw = WIDTH - ml - mr;
        let ph = HEIGHT - mt - mb;
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            w,
            r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        if let Some((x, lo, hi)) = &self.band {
            let mut pts: Vec<String> = x
                .iter()
                .zip(hi)
                .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
                .collect();
            pts.extend(x.iter().zip(lo).rev().map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b))));
            let _ = writeln!(w, r##"<polygon points="{}" fill="#bbbbbb" fill-opacity="0.6" stroke="none"/>"##, pts.join(" "));
        }
        if let Some((x, y)) = &self.points {
            for (a, b) in x.iter().zip(y) {
                let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="black"/>"#, sx(*a), sy(*b));
            }
        }
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> = series
                .x
                .iter()
                .zip(&series.y)
                .filter(|(_, b)| b.is_finite())
                .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.3"/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                w,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                ml + 8.0,
                mt + 14.0 + 14.0 * k as f64,
                escape(&series.name)
            );
        }
        // axes
        let _ = writeln!(
            w,
            r#"<path d="M{ml},{mt} V{} H{}" fill="none" stroke="black"/>"#,
            mt + ph,
            ml + pw
        );
        for t in 0..=4 {
            let f = t as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                w,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
                sx(xv),
                mt + ph + 14.0,
                tick(xv)
            );
            let _ = writeln!(
                w,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{}</text>"#,
                ml - 4.0,
                sy(yv) + 3.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            ml + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            w,
            r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(w, "</svg>");
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Fit chart: observations as points, the posterior mean as a line and the
/// pointwise 95% band shaded.
pub fn emit_fit_plot(
    path: &Path,
    title: &str,
    x: &[f64],
    data: &[f64],
    mean: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<()> {
    LineChart::new(title, "x", "value")
        .band(x.to_vec(), lower.to_vec(), upper.to_vec())
        .points(x.to_vec(), data.to_vec())
        .series("posterior mean", x.to_vec(), mean.to_vec())
        .save(path)
}
