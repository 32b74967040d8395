//! Error-function helpers.
//!
//! Every bin probability in the crate is a difference of two error functions,
//! often far out in a Gaussian tail. [`erf_diff`] evaluates such differences
//! through `erfc` on the side of the origin where both arguments lie, so tail
//! bins keep full relative precision instead of cancelling to zero.

use std::f64::consts::PI;

/// Error function, accurate to about one ulp on the whole real line.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function `1 - erf(x)` without cancellation for large `x`.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `erf(b) - erf(a)`, accepting infinite endpoints.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Probability that a standard normal variate falls in `[a, b]`.
#[inline]
pub fn std_normal_interval(a: f64, b: f64) -> f64 {
    0.5 * erf_diff(a / std::f64::consts::SQRT_2, b / std::f64::consts::SQRT_2)
}
