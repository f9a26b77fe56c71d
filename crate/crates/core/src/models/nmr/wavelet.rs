//! Orthonormal periodic discrete wavelet transform with the symlet-6 filter.

use crate::error::{Error, Result};

/// Symlet-6 decomposition low-pass filter.
pub const SYM6_DEC_LO: [f64; 12] = [
    0.015404109327027373,
    0.0034907120842174702,
    -0.11799011114819057,
    -0.048311742585633,
    0.4910559419267466,
    0.787641141030194,
    0.3379294217276218,
    -0.07263752278646252,
    -0.021060292512300564,
    0.04472490177066578,
    0.0017677118642428036,
    -0.007800708325034148,
];

/// Default decomposition depth.
pub const DEFAULT_LEVELS: usize = 4;

/// Periodic multi-level DWT of a fixed length.
///
/// Coefficients are laid out coarse to fine:
/// `[approx_L, detail_L, detail_{L-1}, ..., detail_1]`. The transform matrix
/// is square and orthogonal, so its inverse is its transpose.
#[derive(Debug, Clone)]
pub struct Wavelet {
    len: usize,
    levels: usize,
    lo: [f64; 12],
    hi: [f64; 12],
}

impl Wavelet {
    pub fn sym6(len: usize, levels: usize) -> Result<Self> {
        let block = 1usize << levels;
        if len == 0 || len % block != 0 {
            return Err(Error::Length { len, block });
        }
        if len / block < SYM6_DEC_LO.len() / 2 {
            return Err(Error::InvalidParameter(format!(
                "length {len} too short for {levels} levels of a 12-tap filter"
            )));
        }
        let lo = SYM6_DEC_LO;
        let mut hi = [0.0; 12];
        for (k, h) in hi.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *h = sign * lo[11 - k];
        }
        Ok(Self { len, levels, lo, hi })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Smallest admissible length not below `len`.
    pub fn padded_len(len: usize, levels: usize) -> usize {
        let block = 1usize << levels;
        len.div_ceil(block) * block
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::Length {
                len: x.len(),
                block: 1 << self.levels,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = x.to_vec();
        let mut scratch = vec![0.0; self.len];
        let mut m = self.len;
        for _ in 0..self.levels {
            let half = m / 2;
            for k in 0..half {
                let (mut a, mut d) = (0.0, 0.0);
                for t in 0..12 {
                    let v = out[(2 * k + t) % m];
                    a += self.lo[t] * v;
                    d += self.hi[t] * v;
                }
                scratch[k] = a;
                scratch[half + k] = d;
            }
            out[..m].copy_from_slice(&scratch[..m]);
            m = half;
        }
        Ok(out)
    }

    pub fn inverse(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check(c)?;
        let mut out = c.to_vec();
        let mut scratch = vec![0.0; self.len];
        let mut m = self.len >> self.levels;
        for _ in 0..self.levels {
            let full = 2 * m;
            scratch[..full].iter_mut().for_each(|v| *v = 0.0);
            for k in 0..m {
                let (a, d) = (out[k], out[m + k]);
                for t in 0..12 {
                    scratch[(2 * k + t) % full] += self.lo[t] * a + self.hi[t] * d;
                }
            }
            out[..full].copy_from_slice(&scratch[..full]);
            m = full;
        }
        Ok(out)
    }

    /// Columns of the synthesis matrix `W^-1` as sparse `(row, value)` lists.
    pub fn synthesis_columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut e = vec![0.0; self.len];
        (0..self.len)
            .map(|l| {
                e[l] = 1.0;
                let col = self.inverse(&e).expect("length checked at construction");
                e[l] = 0.0;
                col.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_is_orthonormal() {
        let s: f64 = SYM6_DEC_LO.iter().map(|v| v * v).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let sum: f64 = SYM6_DEC_LO.iter().sum();
        assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12);
        for shift in 1..6 {
            let dot: f64 = (0..12 - 2 * shift).map(|k| SYM6_DEC_LO[k] * SYM6_DEC_LO[k + 2 * shift]).sum();
            assert!(dot.abs() < 1e-12, "shift {shift}: {dot}");
        }
    }

    #[test]
    fn length_must_be_multiple_of_block() {
        assert!(matches!(Wavelet::sym6(500, 4), Err(Error::Length { len: 500, block: 16 })));
        assert_eq!(Wavelet::padded_len(500, 4), 512);
        let w = Wavelet::sym6(512, 4).unwrap();
        assert!(w.forward(&[0.0; 256]).is_err());
    }

    #[test]
    fn zero_maps_to_zero() {
        let w = Wavelet::sym6(64, 2).unwrap();
        assert!(w.forward(&[0.0; 64]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_signal_lives_in_approximation() {
        let w = Wavelet::sym6(128, 3).unwrap();
        let c = w.forward(&[1.0; 128]).unwrap();
        // the published taps have an alternating sum of about -2.8e-12, which
        // leaks into the details and grows by sqrt(2) per level
        let leak: f64 = SYM6_DEC_LO.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -v }).sum();
        assert!(leak.abs() < 1e-11);
        let bound = 4.0 * leak.abs() * 2f64.powf(1.5);
        assert!(c[16..].iter().all(|v| v.abs() < bound), "max detail {:e}", c[16..].iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
}
