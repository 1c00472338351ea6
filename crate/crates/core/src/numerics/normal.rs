//! Standard normal distribution helpers built on `libm::erfc`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// N(x). `erfc` keeps full relative accuracy in the lower tail.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        let hi = x * x;
        let lo = x.mul_add(x, -hi);
        libm::erfc(x) * hi.exp() * lo.exp()
    } else {
        // asymptotic series; the first omitted term is below 1e-22 here
        let inv2x2 = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..10 {
            term *= -((2 * k - 1) as f64) * inv2x2;
            sum += term;
        }
        sum / (x * PI.sqrt())
    }
}

/// Inverse Mills ratio `pdf(y) / cdf(y)`, stable for very negative `y`.
pub fn inv_mills(y: f64) -> f64 {
    (2.0 / PI).sqrt() / erfcx(-y * FRAC_1_SQRT_2)
}
