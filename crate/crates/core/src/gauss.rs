//! Standard normal distribution helpers.

use std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal CDF, `Φ(x) = erfc(-x/√2) / 2`.
///
/// Going through `erfc` keeps relative accuracy in the lower tail, where
/// `1 + erf(x)` would cancel.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P(lo < X < hi)` for `X ~ N(mean, sd²)` with `sd > 0`.
pub fn normal_interval(mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(sd > 0.0);
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    // Evaluate on the side of the mean where both CDF values are small, so
    // the difference does not cancel.
    let p = if a > 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    };
    p.clamp(0.0, 1.0)
}
