//! Credit-risky discount bonds with a discrete recovery spectrum.

use crate::curve::DiscountCurve;
use crate::error::{invalid, Error, Result};
use crate::process::{
    check_before_maturity, conditional_probs, information_path_at, information_path_given,
    posterior_weights, DiscretePayoff, Factor, InformationProcessSpec, TimeGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondState {
    pub t: f64,
    pub xi: f64,
    pub price: f64,
    pub cond_probs: Vec<f64>,
    pub cond_mean: f64,
    pub cond_var: f64,
    /// Third central moment of the payoff under the posterior.
    pub cond_skew: f64,
    pub abs_vol: f64,
    pub vol_of_vol: f64,
}

/// Price and local dynamics of the bond at `(t, xi)`.
pub fn price_bond(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    curve: &DiscountCurve,
    t: f64,
    xi: f64,
) -> Result<BondState> {
    let probs = conditional_probs(payoff, spec, t, xi)?;
    let h = payoff.levels();
    let mean: f64 = h.iter().zip(&probs).map(|(h, p)| h * p).sum();
    let mut var = 0.0;
    let mut skew = 0.0;
    for (hi, p) in h.iter().zip(&probs) {
        let d = hi - mean;
        var += p * d * d;
        skew += p * d * d * d;
    }
    let discount = curve.forward_discount(t, spec.horizon);
    let rate = spec.sigma * spec.horizon / (spec.horizon - t);
    Ok(BondState {
        t,
        xi,
        price: discount * mean,
        cond_probs: probs,
        cond_mean: mean,
        cond_var: var,
        cond_skew: skew,
        abs_vol: rate * discount * var,
        vol_of_vol: rate * rate * discount * skew,
    })
}

/// A-priori probabilities `(p0, p1)` implied by a binary bond price `B_0T`.
pub fn implied_a_priori_probs(
    bond_price: f64,
    curve: &DiscountCurve,
    maturity: f64,
    h0: f64,
    h1: f64,
) -> Result<(f64, f64)> {
    if !(h1 > h0) {
        return invalid("need h1 > h0");
    }
    let p0t = curve.discount(maturity);
    let ratio = bond_price / p0t;
    if !(ratio > h0 && ratio < h1) {
        return Err(Error::NoSolution(format!(
            "bond price {bond_price} outside ({}, {})",
            p0t * h0,
            p0t * h1
        )));
    }
    let p0 = (h1 - ratio) / (h1 - h0);
    let p1 = (ratio - h0) / (h1 - h0);
    Ok((p0, p1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DigitalDecomposition {
    /// Price of the digital bond paying 1 on no default.
    pub digital: f64,
    /// `P_tT h0 + D_tT (h1 - h0)`.
    pub reconstructed: f64,
}

/// Information value seen by the digital bond: `xi - sigma h0 t`.
pub fn digital_information(sigma: f64, h0: f64, t: f64, xi: f64) -> f64 {
    xi - sigma * h0 * t
}

/// Splits a binary bond into a riskless part and a digital bond.
pub fn digital_decomposition(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    curve: &DiscountCurve,
    t: f64,
    xi: f64,
) -> Result<DigitalDecomposition> {
    if !payoff.is_binary() {
        return invalid("digital decomposition needs a binary payoff");
    }
    check_before_maturity(t, spec.horizon)?;
    let (h0, h1) = (payoff.levels()[0], payoff.levels()[1]);
    let sigma_bar = spec.sigma * (h1 - h0);
    let xi_bar = digital_information(spec.sigma, h0, t, xi);
    let w = posterior_weights(&[0.0, 1.0], payoff.probs(), sigma_bar, spec.horizon, t, xi_bar)?;
    let discount = curve.forward_discount(t, spec.horizon);
    let digital = discount * w[1];
    Ok(DigitalDecomposition { digital, reconstructed: discount * h0 + digital * (h1 - h0) })
}

/// Model restarted at `start`: same factor, posterior prior, horizon `T - start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reinitialized {
    pub spec: InformationProcessSpec,
    pub payoff: DiscretePayoff,
    pub start: f64,
    pub xi_start: f64,
    pub original_horizon: f64,
}

impl Reinitialized {
    /// `eta_u = xi_u - (T - u)/(T - t) xi_t`, indexed by local time `u - t`.
    pub fn eta(&self, u: f64, xi_u: f64) -> (f64, f64) {
        let big_t = self.original_horizon;
        (u - self.start, xi_u - (big_t - u) / (big_t - self.start) * self.xi_start)
    }

    /// Posterior at original time `u` computed inside the restarted model.
    pub fn conditional_probs_at(&self, u: f64, xi_u: f64) -> Result<Vec<f64>> {
        let (local, eta) = self.eta(u, xi_u);
        conditional_probs(&self.payoff, &self.spec, local, eta)
    }
}

pub fn reinitialize(
    spec: &InformationProcessSpec,
    payoff: &DiscretePayoff,
    t: f64,
    xi_t: f64,
) -> Result<Reinitialized> {
    check_before_maturity(t, spec.horizon)?;
    let posterior = payoff.with_probs(conditional_probs(payoff, spec, t, xi_t)?)?;
    let sigma = spec.sigma * spec.horizon / (spec.horizon - t);
    let new_spec =
        InformationProcessSpec::discrete(sigma, spec.horizon - t, posterior.clone())?;
    Ok(Reinitialized {
        spec: new_spec,
        payoff: posterior,
        start: t,
        xi_start: xi_t,
        original_horizon: spec.horizon,
    })
}

/// `1 / (sigma^2 (h1 - h0)^2)`; infinite when `sigma = 0`.
pub fn information_timescale(spec: &InformationProcessSpec, payoff: &DiscretePayoff) -> Result<f64> {
    if !payoff.is_binary() {
        return invalid("timescale is defined for binary payoffs");
    }
    let spread = payoff.levels()[1] - payoff.levels()[0];
    if spec.sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (spec.sigma * spread).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BondPaths {
    pub grid: TimeGrid,
    /// `prices[k][i]` is path `k` at grid point `i`.
    pub prices: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
}

impl BondPaths {
    /// `t,path_0,...`; the final row carries the terminal factor values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for k in 0..self.prices.len() {
            write!(out, ",path_{k}").unwrap();
        }
        out.push('\n');
        for (i, t) in self.grid.points().iter().enumerate() {
            write!(out, "{}", fmt17(*t)).unwrap();
            for path in &self.prices {
                write!(out, ",{}", fmt17(path[i])).unwrap();
            }
            out.push('\n');
        }
        out.push_str("H_T");
        for h in &self.terminal {
            write!(out, ",{}", fmt17(*h)).unwrap();
        }
        out.push('\n');
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Simulated bond price paths. With `condition = Some(h)` every path has `H_T = h`.
pub fn simulate_bond_paths_conditioned(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    curve: &DiscountCurve,
    grid: &TimeGrid,
    n_paths: usize,
    rng_seed: u64,
    condition: Option<f64>,
) -> Result<BondPaths> {
    let last = grid.points()[grid.len() - 1];
    check_before_maturity(last, spec.horizon)?;
    let spec = InformationProcessSpec::new(spec.sigma, spec.horizon, Factor::Discrete(payoff.clone()))?;
    let rows: Result<Vec<(Vec<f64>, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let path = match condition {
                Some(h) => information_path_given(spec.sigma, grid, rng_seed, k, h)?,
                None => information_path_at(&spec, grid, rng_seed, k)?,
            };
            let prices = grid
                .points()
                .iter()
                .zip(&path.values)
                .map(|(&t, &xi)| price_bond(payoff, &spec, curve, t, xi).map(|s| s.price))
                .collect::<Result<Vec<f64>>>()?;
            Ok((prices, path.terminal.unwrap_or(f64::NAN)))
        })
        .collect();
    let (prices, terminal) = rows?.into_iter().unzip();
    Ok(BondPaths { grid: grid.clone(), prices, terminal })
}

pub fn simulate_bond_paths(
    payoff: &DiscretePayoff,
    spec: &InformationProcessSpec,
    curve: &DiscountCurve,
    grid: &TimeGrid,
    n_paths: usize,
    rng_seed: u64,
) -> Result<BondPaths> {
    simulate_bond_paths_conditioned(payoff, spec, curve, grid, n_paths, rng_seed, None)
}
