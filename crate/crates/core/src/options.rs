//! European calls on credit-risky discount bonds.

use crate::credit::price_bond;
use crate::curve::DiscountCurve;
use crate::error::{invalid, Error, Result};
use crate::numerics::normal::{cdf, pdf};
use crate::numerics::root::{bisect_increasing, bracket_increasing};
use crate::process::{conditional_probs, posterior_log_weights, DiscretePayoff, InformationProcessSpec};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct OptionSpec {
    pub strike: f64,
    /// Option expiry `t`.
    pub expiry: f64,
    pub payoff: DiscretePayoff,
    /// Information process of the underlying bond; its horizon is the bond maturity.
    pub spec: InformationProcessSpec,
    pub curve: DiscountCurve,
}

impl OptionSpec {
    pub fn new(
        strike: f64,
        expiry: f64,
        payoff: DiscretePayoff,
        spec: InformationProcessSpec,
        curve: DiscountCurve,
    ) -> Result<Self> {
        if !(strike > 0.0 && strike.is_finite()) {
            return invalid("strike must be positive");
        }
        if !(expiry > 0.0 && expiry < spec.horizon) {
            return invalid("option expiry must lie strictly inside (0, T)");
        }
        Ok(OptionSpec { strike, expiry, payoff, spec, curve })
    }

    pub fn maturity(&self) -> f64 {
        self.spec.horizon
    }

    /// `P_tT` from expiry to bond maturity.
    pub fn forward_discount(&self) -> f64 {
        self.curve.forward_discount(self.expiry, self.maturity())
    }

    /// `tau = t T / (T - t)`.
    pub fn tau(&self) -> f64 {
        let (t, big_t) = (self.expiry, self.maturity());
        t * big_t / (big_t - t)
    }

    /// Time-0 price of the underlying bond.
    pub fn bond_price(&self) -> f64 {
        self.curve.discount(self.maturity()) * self.payoff.mean()
    }

    pub fn strike_region(&self) -> StrikeRegion {
        let p = self.forward_discount();
        let h = self.payoff.levels();
        if self.strike <= p * h[0] {
            StrikeRegion::AlwaysInTheMoney
        } else if self.strike >= p * h[h.len() - 1] {
            StrikeRegion::NeverInTheMoney
        } else {
            StrikeRegion::Interior
        }
    }
}

/// Where the strike sits relative to the attainable bond prices at expiry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrikeRegion {
    AlwaysInTheMoney,
    NeverInTheMoney,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionGreeks {
    pub vega: f64,
    pub delta: f64,
}

fn boundary_price(opt: &OptionSpec) -> Option<f64> {
    let p0t = opt.curve.discount(opt.expiry);
    match opt.strike_region() {
        StrikeRegion::AlwaysInTheMoney => Some(opt.bond_price() - p0t * opt.strike),
        StrikeRegion::NeverInTheMoney => Some(0.0),
        StrikeRegion::Interior if opt.spec.sigma == 0.0 => {
            // no information arrives: the bond price at expiry is known today
            let b = opt.forward_discount() * opt.payoff.mean();
            Some(p0t * (b - opt.strike).max(0.0))
        }
        StrikeRegion::Interior => None,
    }
}

/// `d+` and `d-` for the binary call with posterior weights `(w0, w1)` and
/// total information variance `s^2`.
fn binary_d(w0: f64, w1: f64, up: f64, down: f64, s: f64) -> (f64, f64) {
    let log_odds = (w1 * up).ln() - (w0 * down).ln();
    ((log_odds + 0.5 * s * s) / s, (log_odds - 0.5 * s * s) / s)
}

/// Closed-form call on a binary bond.
pub fn price_binary_call(opt: &OptionSpec) -> Result<f64> {
    if !opt.payoff.is_binary() {
        return invalid("binary call needs a two-level payoff");
    }
    if let Some(v) = boundary_price(opt) {
        return Ok(v);
    }
    let (h0, h1) = (opt.payoff.levels()[0], opt.payoff.levels()[1]);
    let (p0, p1) = (opt.payoff.probs()[0], opt.payoff.probs()[1]);
    let p = opt.forward_discount();
    let k = opt.strike;
    let s = opt.spec.sigma * opt.tau().sqrt() * (h1 - h0);
    let (up, down) = (p * h1 - k, k - p * h0);
    let (dp, dm) = binary_d(p0, p1, up, down, s);
    let p0t = opt.curve.discount(opt.expiry);
    Ok(p0t * (p1 * up * cdf(dp) - p0 * down * cdf(dm)))
}

/// Critical information value at expiry above which the call ends in the money.
pub fn critical_information(opt: &OptionSpec) -> Result<f64> {
    let p = opt.forward_discount();
    let (t, big_t) = (opt.expiry, opt.maturity());
    let h = opt.payoff.levels();
    let probs = opt.payoff.probs();
    let signs: Vec<f64> = h.iter().map(|hi| p * hi - opt.strike).collect();
    // sign of sum_i (P h_i - K) w_i(xi), evaluated with the largest weight shifted out
    let f = |xi: f64| {
        let lw = posterior_log_weights(h, probs, opt.spec.sigma, big_t, t, xi);
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        signs.iter().zip(&lw).map(|(s, l)| s * (l - max).exp()).sum::<f64>()
    };
    let width = 50.0 * (t * (big_t - t) / big_t).sqrt();
    let (lo, hi) = bracket_increasing(&f, 0.0, width)?;
    bisect_increasing(f, lo, hi, 1e-13)
}

/// Call on a bond with any finite recovery spectrum.
pub fn price_multirecovery_call(opt: &OptionSpec) -> Result<f64> {
    if let Some(v) = boundary_price(opt) {
        return Ok(v);
    }
    let xi_bar = match critical_information(opt) {
        Ok(x) => x,
        Err(Error::NoSolution(_)) => {
            return invalid("strike has no critical information value");
        }
        Err(e) => return Err(e),
    };
    let (t, big_t) = (opt.expiry, opt.maturity());
    let z_bar = xi_bar / (t * (big_t - t) / big_t).sqrt();
    let root_tau = opt.tau().sqrt();
    let p = opt.forward_discount();
    let total: f64 = opt
        .payoff
        .levels()
        .iter()
        .zip(opt.payoff.probs())
        .map(|(h, pi)| pi * (p * h - opt.strike) * cdf(opt.spec.sigma * h * root_tau - z_bar))
        .sum();
    Ok(opt.curve.discount(t) * total)
}

/// Price at time `s <= t` given `xi_s`.
pub fn option_price_process(opt: &OptionSpec, s: f64, xi_s: f64) -> Result<f64> {
    if !opt.payoff.is_binary() {
        return invalid("price process is implemented for binary payoffs");
    }
    let (t, big_t) = (opt.expiry, opt.maturity());
    if !(s >= 0.0 && s <= t) {
        return invalid(format!("valuation time {s} must lie in [0, {t}]"));
    }
    let p_st = opt.curve.discount(t) / opt.curve.discount(s);
    let p = opt.forward_discount();
    let k = opt.strike;
    let (h0, h1) = (opt.payoff.levels()[0], opt.payoff.levels()[1]);
    let w = conditional_probs(&opt.payoff, &opt.spec, s, xi_s)?;
    let bond_at_s = opt.curve.forward_discount(s, big_t) * (w[0] * h0 + w[1] * h1);
    match opt.strike_region() {
        StrikeRegion::AlwaysInTheMoney => return Ok(bond_at_s - p_st * k),
        StrikeRegion::NeverInTheMoney => return Ok(0.0),
        StrikeRegion::Interior => {}
    }
    if s == t || opt.spec.sigma == 0.0 {
        let b = price_bond(&opt.payoff, &opt.spec, &opt.curve, t, xi_s)?;
        let expiry_value = if s == t { b.price } else { p * opt.payoff.mean() };
        return Ok(p_st * (expiry_value - k).max(0.0));
    }
    let v2 = (t - s) / ((big_t - t) * (big_t - s));
    let spread = opt.spec.sigma * v2.sqrt() * big_t * (h1 - h0);
    let (up, down) = (p * h1 - k, k - p * h0);
    let (dp, dm) = binary_d(w[0], w[1], up, down, spread);
    Ok(p_st * (w[1] * up * cdf(dp) - w[0] * down * cdf(dm)))
}

/// Vega and delta (with respect to the bond price) of a binary call.
pub fn greeks(opt: &OptionSpec) -> Result<OptionGreeks> {
    if !opt.payoff.is_binary() {
        return invalid("greeks are implemented for binary payoffs");
    }
    if opt.strike_region() != StrikeRegion::Interior {
        return Err(Error::GreeksUndefined(format!(
            "strike {} is outside the open interval of attainable bond prices",
            opt.strike
        )));
    }
    if opt.spec.sigma == 0.0 {
        return Err(Error::GreeksUndefined("zero information flow rate".into()));
    }
    let (h0, h1) = (opt.payoff.levels()[0], opt.payoff.levels()[1]);
    let (p0, p1) = (opt.payoff.probs()[0], opt.payoff.probs()[1]);
    let p = opt.forward_discount();
    let k = opt.strike;
    let tau = opt.tau();
    let s = opt.spec.sigma * tau.sqrt() * (h1 - h0);
    let (up, down) = (p * h1 - k, k - p * h0);
    let log_odds = (p1 * up / (p0 * down)).ln();
    let big_a = log_odds * log_odds / (s * s) + s * s / 4.0;
    let p0t = opt.curve.discount(opt.expiry);
    let vega = p0t * pdf(0.0) * (-0.5 * big_a).exp() * (h1 - h0) * (tau * p0 * p1 * up * down).sqrt();
    let (dp, dm) = binary_d(p0, p1, up, down, s);
    let delta = (up * cdf(dp) + down * cdf(dm)) / (p * (h1 - h0));
    Ok(OptionGreeks { vega, delta })
}

/// Call price as a function of today's bond price, with `p0, p1` implied from it.
pub fn binary_call_from_bond_price(opt: &OptionSpec, bond_price: f64) -> Result<f64> {
    let (h0, h1) = (opt.payoff.levels()[0], opt.payoff.levels()[1]);
    let (p0, p1) = crate::credit::implied_a_priori_probs(
        bond_price,
        &opt.curve,
        opt.maturity(),
        h0,
        h1,
    )?;
    let payoff = DiscretePayoff::new(vec![h0, h1], vec![p0, p1])?;
    let spec = InformationProcessSpec::discrete(opt.spec.sigma, opt.maturity(), payoff.clone())?;
    price_binary_call(&OptionSpec { payoff, spec, ..opt.clone() })
}
