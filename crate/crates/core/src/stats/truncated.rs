//! Truncated normal moments and sampling.

use super::quad::GaussLegendre;
use super::special::{log_normal_cdf_diff, log_normal_pdf, normal_cdf, normal_quantile};
use super::RngHandle;
use crate::error::{Error, Result};

/// Mass threshold below which the inverse-CDF sampler hands over to rejection.
const INVERSE_CDF_MIN_MASS: f64 = 1e-10;

/// log(1e-300): truncations with less mass than this are reported as degenerate.
const LOG_MIN_MASS: f64 = -690.775_527_898_213_7;

/// Exact first two moments of N(mean, variance) truncated to [lower, upper].
///
/// Infinite bounds are allowed. Returns `(mean, variance)` of the truncated law.
pub fn truncated_normal_moments(mean: f64, variance: f64, lower: f64, upper: f64) -> Result<(f64, f64)> {
    if !(variance > 0.0) || !(lower < upper) {
        return Err(Error::InvalidParameter(format!(
            "truncated normal needs variance > 0 and lower < upper (got {variance}, [{lower}, {upper}])"
        )));
    }
    let sd = variance.sqrt();
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let log_z = log_normal_cdf_diff(a, b);
    if !(log_z > LOG_MIN_MASS) {
        return Err(Error::VanishingMass { mean, sd, lower, upper });
    }
    if b - a < 1e-3 || log_z < -30.0 {
        // narrow or far-tail windows: the Mills-ratio form cancels badly,
        // integrate the tilted density directly instead
        if a.is_finite() && b.is_finite() {
            return Ok(narrow_window_moments(mean, sd, a, b));
        }
    }
    // ratios φ(a)/Z and φ(b)/Z computed in log space
    let ra = if a.is_finite() { (log_normal_pdf(a) - log_z).exp() } else { 0.0 };
    let rb = if b.is_finite() { (log_normal_pdf(b) - log_z).exp() } else { 0.0 };
    let lambda = ra - rb;
    let a_ra = if a.is_finite() { a * ra } else { 0.0 };
    let b_rb = if b.is_finite() { b * rb } else { 0.0 };
    let m = mean + sd * lambda;
    let v = variance * (1.0 + a_ra - b_rb - lambda * lambda);
    if v > 0.0 && v.is_finite() {
        Ok((m, v))
    } else if a.is_finite() && b.is_finite() {
        Ok(narrow_window_moments(mean, sd, a, b))
    } else {
        // one-sided far tail: Mills-ratio asymptotics, variance ≈ sd²/a²
        let edge = if a.is_finite() { a } else { -b };
        let v = variance / (edge * edge);
        Ok((m, v))
    }
}

fn narrow_window_moments(mean: f64, sd: f64, a: f64, b: f64) -> (f64, f64) {
    // moments of the density ∝ exp(-x²/2) on [a, b], re-centred at the
    // endpoint of highest density so the exponent stays bounded
    let anchor = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    let gl = GaussLegendre::new(32);
    let w = |x: f64| (-0.5 * (x * x - anchor * anchor)).exp();
    let z = gl.integrate(w, a, b, 8);
    let m1 = gl.integrate(|x| (x - anchor) * w(x), a, b, 8) / z;
    let m2 = gl.integrate(|x| (x - anchor) * (x - anchor) * w(x), a, b, 8) / z;
    let var_std = (m2 - m1 * m1).max(0.0);
    (mean + sd * (anchor + m1), sd * sd * var_std)
}

/// Log-density of N(mean, variance) truncated to [lower, upper].
pub fn truncated_normal_log_pdf(x: f64, mean: f64, variance: f64, lower: f64, upper: f64) -> f64 {
    if x < lower || x > upper {
        return f64::NEG_INFINITY;
    }
    let sd = variance.sqrt();
    log_normal_pdf((x - mean) / sd) - sd.ln() - log_normal_cdf_diff((lower - mean) / sd, (upper - mean) / sd)
}

/// Draw from N(mean, variance) truncated to [lower, upper].
///
/// Inverse CDF on the truncated uniform interval; when the window holds less
/// than 1e-10 of the mass, a tail rejection sampler takes over. The result
/// always lies in `[lower, upper]`.
pub fn sample_truncated_normal(mean: f64, variance: f64, lower: f64, upper: f64, rng: &mut RngHandle) -> f64 {
    debug_assert!(variance > 0.0 && lower <= upper);
    if lower == upper {
        return lower;
    }
    let sd = variance.sqrt();
    let mut a = (lower - mean) / sd;
    let mut b = (upper - mean) / sd;
    // work on the side of the origin where Φ keeps full relative precision
    let flip = a > 0.0;
    if flip {
        let t = a;
        a = -b;
        b = -t;
    }
    let pa = normal_cdf(a);
    let pb = normal_cdf(b);
    let mass = pb - pa;
    let std_draw = if mass >= INVERSE_CDF_MIN_MASS && mass > 1e-6 * pb {
        let u = pa + rng.uniform() * mass;
        normal_quantile(u).clamp(a, b)
    } else {
        tail_rejection(a, b, rng)
    };
    let z = if flip { -std_draw } else { std_draw };
    let v = (mean + sd * z).clamp(lower, upper);
    // keep draws in the open interval so strict constraints hold
    if v <= lower {
        lower.next_up().min(upper)
    } else if v >= upper {
        upper.next_down().max(lower)
    } else {
        v
    }
}

/// Quantile function of N(mean, variance) truncated to [lower, upper] at
/// probability `u` in [0, 1].
///
/// Uses direct inversion when the window carries enough mass and bisection
/// on the log-space CDF otherwise.
pub fn truncated_normal_quantile(mean: f64, variance: f64, lower: f64, upper: f64, u: f64) -> f64 {
    if lower == upper {
        return lower;
    }
    let sd = variance.sqrt();
    let (mut a, mut b) = ((lower - mean) / sd, (upper - mean) / sd);
    let flip = a > 0.0;
    let mut p = u.clamp(0.0, 1.0);
    if flip {
        (a, b) = (-b, -a);
        p = 1.0 - p;
    }
    let pa = normal_cdf(a);
    let pb = normal_cdf(b);
    let mass = pb - pa;
    let z = if mass >= INVERSE_CDF_MIN_MASS && mass > 1e-6 * pb {
        normal_quantile(pa + p * mass).clamp(a, b)
    } else {
        let log_total = log_normal_cdf_diff(a, b);
        let target = p.max(f64::MIN_POSITIVE).ln() + log_total;
        let (mut lo, mut hi) = (a.max(-1e3), b.min(1e3));
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if log_normal_cdf_diff(a, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let z = if flip { -z } else { z };
    (mean + sd * z).clamp(lower, upper)
}

/// Standard normal restricted to [a, b] with b ≤ 0 or a < 0 < b, by rejection.
fn tail_rejection(a: f64, b: f64, rng: &mut RngHandle) -> f64 {
    if a < 0.0 && b > 0.0 {
        // narrow window straddling the mode: uniform proposal
        loop {
            let z = a + (b - a) * rng.uniform();
            if rng.uniform().ln() <= -0.5 * z * z {
                return z;
            }
        }
    }
    // reflect so the window is [lo, hi] with 0 ≤ lo
    let (lo, hi) = (-b, -a);
    let width = hi - lo;
    let z = if width * (2.0 * lo + width) <= 2.0 {
        loop {
            let z = lo + width * rng.uniform();
            if rng.uniform().ln() <= -0.5 * (z - lo) * (z + lo) {
                break z;
            }
        }
    } else {
        // exponential proposal with the optimal rate for the lower edge
        let rate = 0.5 * (lo + (lo * lo + 4.0).sqrt());
        loop {
            let z = lo + rng.standard_exponential() / rate;
            if z > hi {
                continue;
            }
            let d = z - rate;
            if rng.uniform().ln() <= -0.5 * d * d {
                break z;
            }
        }
    };
    -z
}
