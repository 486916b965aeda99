//! Log-domain Gaussian helpers.

use std::f64::consts::{LN_2, PI, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `log N(x; mean, var)`.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Standard normal log density.
#[inline]
pub fn std_normal_logpdf(z: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * z * z
}

/// `ln erfc(t)` without underflow for large positive `t`.
pub fn ln_erfc(t: f64) -> f64 {
    if t > 8.0 {
        // erfc(t)·exp(t²) as a rational function of t (valid for t > 8)
        const P: [f64; 6] = [
            2.978_865_626_393_992_888_62,
            7.409_740_605_964_741_794_425,
            6.160_209_853_109_630_544_090_6,
            5.019_049_726_784_267_463_450_058,
            1.275_366_644_729_965_952_479_585_264,
            0.564_189_583_547_755_074_125_320_170_4,
        ];
        const Q: [f64; 7] = [
            3.369_075_206_982_752_767_7,
            9.608_965_327_192_787_870_698,
            17.081_440_747_466_004_315_710_95,
            12.048_951_927_855_129_036_034_049_1,
            9.396_034_016_235_054_150_430_579_648,
            2.260_528_520_767_326_969_591_866_945,
            1.0,
        ];
        let p = P.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let q = Q.iter().rev().fold(0.0, |acc, c| acc * t + c);
        (p / q).ln() - t * t
    } else {
        libm::erfc(t).ln()
    }
}

/// `ln Φ(z)` for the standard normal CDF, accurate deep into the lower tail.
#[inline]
pub fn ln_norm_cdf(z: f64) -> f64 {
    -LN_2 + ln_erfc(-z / SQRT_2)
}

/// `ln(eᵃ + eᵇ)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Inverse Mills ratio `φ(u)/Φ(u)`.
#[inline]
pub fn inv_mills(u: f64) -> f64 {
    (std_normal_logpdf(u) - ln_norm_cdf(u)).exp()
}
