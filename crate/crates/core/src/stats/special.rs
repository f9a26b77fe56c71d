//! Standard normal density and distribution function in linear and log space,
//! plus the gamma-family special functions needed by the score functions.

use statrs::function::erf;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};

/// `ln(sqrt(2 pi))`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Log of the standard normal density.
pub fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Standard normal distribution function Φ(x).
///
/// Evaluated through the complementary error function so both tails keep full
/// relative precision: Φ(x) = erfc(-x/√2)/2.
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile function Φ⁻¹(p).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    // Newton steps against the high-accuracy cdf, in the tail where p has
    // full relative precision
    for _ in 0..2 {
        let dens = normal_pdf(x);
        if !(dens > 0.0) {
            break;
        }
        let err = if x <= 0.0 {
            normal_cdf(x) - p
        } else {
            (1.0 - p) - normal_cdf(-x)
        };
        let step = if x <= 0.0 { err / dens } else { -err / dens };
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// log Φ(x), accurate deep into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 0.0 {
        return (-normal_cdf(-x)).ln_1p();
    }
    if x > -35.0 {
        return normal_cdf(x).ln();
    }
    // asymptotic expansion of the Mills ratio
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    log_normal_pdf(x) - (-x).ln() + series.ln()
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(Φ(b) - Φ(a))` for `a < b`, without cancellation in either tail.
pub fn log_normal_cdf_diff(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        // reflect into the lower tail
        return log_normal_cdf_diff(-b, -a);
    }
    if b <= 0.0 {
        let lb = log_normal_cdf(b);
        let la = log_normal_cdf(a);
        return lb + log1m_exp(la - lb);
    }
    // a < 0 < b: both excluded tails have mass below one half
    (-(normal_cdf(a) + normal_cdf(-b))).ln_1p()
}

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Digamma function ψ(x) = Γ'(x)/Γ(x) for x > 0.
///
/// Upward recurrence to x ≥ 10, then the asymptotic Bernoulli series.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.0 {
        // reflection
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 10.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    acc + z.ln() - 0.5 * inv - tail
}
