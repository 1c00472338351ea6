//! Bisection for monotone scalar equations.

use crate::error::{Error, Result};

/// Root of an increasing `f` inside `[lo, hi]`, where `f(lo) <= 0 <= f(hi)`.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::Divergence("NaN while bracketing".into()));
    }
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoSolution(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Divergence(format!("NaN at {mid}")));
        }
        if fm < 0.0 {
            lo = mid;
        } else if fm > 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bracket the root of an increasing `f`, starting from `[-width, width]` around
/// `centre` and doubling the half-width until the sign changes.
pub fn bracket_increasing<F: Fn(f64) -> f64>(f: &F, centre: f64, width: f64) -> Result<(f64, f64)> {
    let mut w = width;
    for _ in 0..200 {
        let (lo, hi) = (centre - w, centre + w);
        if f(lo) <= 0.0 && f(hi) >= 0.0 {
            return Ok((lo, hi));
        }
        w *= 2.0;
        if !w.is_finite() {
            break;
        }
    }
    Err(Error::NoSolution("could not bracket root".into()))
}
