//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-10, abs: 1e-300, max_intervals: 5000 }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { rel, ..Default::default() }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_pieces(&f, &[a, b], tol)
}

/// Integrate over consecutive intervals `breaks[k]..breaks[k+1]`, so that kinks
/// and peaks placed on break points are resolved early.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("quadrature needs at least one interval".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    let mut frozen: Vec<Piece> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
        }
        if b == a {
            continue;
        }
        let (value, error) = kronrod(f, a, b);
        err += error;
        heap.push(Piece { a, b, value, error });
    }
    // relative accuracy is measured against the summed piece magnitudes, so
    // integrals that cancel to nearly zero still terminate
    let target = |scale: f64| tol.abs.max(tol.rel * scale);
    let mut scale: f64 = heap.iter().map(|p: &Piece| p.value.abs()).sum();
    while err > target(scale) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * mid.abs() {
            // cannot split further; keep its contribution as is
            err -= worst.error;
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod(f, worst.a, mid);
        let (v2, e2) = kronrod(f, mid, worst.b);
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        scale += v1.abs() + v2.abs() - worst.value.abs();
    }
    // re-sum to drop accumulated cancellation in the running totals
    let mut value = 0.0;
    let mut error = 0.0;
    let mut scale = 0.0;
    for p in heap.iter().chain(frozen.iter()) {
        value += p.value;
        error += p.error;
        scale += p.value.abs();
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Divergence("integrand produced non-finite values".into()));
    }
    if error > 1e-6 * scale + tol.abs.max(1e-280) && error > target(scale) {
        return Err(Error::Divergence(format!(
            "quadrature stalled at error {error:e} for value {value:e}"
        )));
    }
    Ok(Estimate { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let e = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, Tolerance::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((e.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let e = integrate(super::super::normal::pdf, -12.0, 12.0, Tolerance::rel(1e-13)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kink_with_and_without_break() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.5 * 0.3 * 0.3 + 0.5 * 0.7 * 0.7;
        let plain = integrate(f, 0.0, 1.0, Tolerance::rel(1e-12)).unwrap();
        let split = integrate_pieces(&f, &[0.0, 0.3, 1.0], Tolerance::rel(1e-12)).unwrap();
        assert!((plain.value - exact).abs() < 1e-11);
        assert!((split.value - exact).abs() < 1e-15);
    }

    #[test]
    fn nan_is_divergence() {
        let r = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, Tolerance::default());
        assert!(matches!(r, Err(Error::Divergence(_))));
    }
}
