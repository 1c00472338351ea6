//! Arrow-Debreu densities of the information process and pricing of
//! information derivatives against them.

use std::sync::Arc;

use crate::curve::DiscountCurve;
use crate::equity::{critical_information as asset_critical_information, prior_breaks, SingleDividendAsset};
use crate::error::{invalid, Result};
use crate::numerics::normal::{cdf, SQRT_2PI};
use crate::numerics::quad::{self, Tolerance};
use crate::options::{critical_information as bond_critical_information, OptionSpec, StrikeRegion};
use crate::process::{check_before_maturity, conditional_mean, DiscretePayoff, Factor, InformationProcessSpec};

/// Number of mixture standard deviations kept beyond the extreme means.
pub const TRUNCATION_SD: f64 = 12.0;

/// Density of `xi_t` at a fixed date, optionally discounted by `P_0t`.
#[derive(Debug, Clone)]
pub struct ADensity {
    pub t: f64,
    pub spec: InformationProcessSpec,
    pub discount: f64,
    tol: Tolerance,
}

impl ADensity {
    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    /// Standard deviation of the bridge at `t`.
    pub fn bridge_sd(&self) -> f64 {
        let big_t = self.spec.horizon;
        (self.t * (big_t - self.t) / big_t).sqrt()
    }

    /// `A(x)`, the probability density of `xi_t`.
    pub fn undiscounted(&self, x: f64) -> Result<f64> {
        let s = self.bridge_sd();
        let shift = self.spec.sigma * self.t;
        let gauss = |m: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * SQRT_2PI);
        match &self.spec.factor {
            Factor::Discrete(payoff) => Ok(payoff
                .levels()
                .iter()
                .zip(payoff.probs())
                .map(|(h, p)| p * gauss(shift * h))
                .sum()),
            Factor::Continuous(prior) => {
                if shift == 0.0 {
                    return Ok(gauss(0.0));
                }
                let mut breaks = prior_breaks(prior);
                let centre = x / shift;
                // the Gaussian in z has width s / shift; mark it so quadrature sees it
                for z in [centre - 8.0 * s / shift, centre, centre + 8.0 * s / shift] {
                    if z > breaks[0] && z < breaks[breaks.len() - 1] {
                        breaks.push(z);
                    }
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let f = |z: f64| prior.pdf(z) * gauss(shift * z);
                Ok(quad::integrate_pieces(&f, &breaks, self.tol)?.value)
            }
        }
    }

    /// `A_0t(x) = P_0t A(x)`.
    pub fn discounted(&self, x: f64) -> Result<f64> {
        Ok(self.discount * self.undiscounted(x)?)
    }

    /// Interval outside of which the density is negligible.
    pub fn truncation(&self) -> (f64, f64) {
        let shift = self.spec.sigma * self.t;
        let (lo, hi) = match &self.spec.factor {
            Factor::Discrete(payoff) => {
                let h = payoff.levels();
                (h[0], h[h.len() - 1])
            }
            Factor::Continuous(prior) => {
                let b = prior_breaks(prior);
                (b[0], b[b.len() - 1])
            }
        };
        let pad = TRUNCATION_SD * self.bridge_sd();
        (shift * lo - pad, shift * hi + pad)
    }

    /// Break points for quadrature against this density: the truncation
    /// ends plus the centre of every component or the prior's own breaks.
    fn breaks(&self) -> Vec<f64> {
        let shift = self.spec.sigma * self.t;
        let (lo, hi) = self.truncation();
        let mut b = vec![lo, hi];
        match &self.spec.factor {
            Factor::Discrete(payoff) => b.extend(payoff.levels().iter().map(|h| shift * h)),
            Factor::Continuous(prior) => b.extend(prior_breaks(prior).into_iter().map(|z| shift * z)),
        }
        b.retain(|x| *x >= lo && *x <= hi);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

pub fn ad_density(spec: &InformationProcessSpec, curve: &DiscountCurve, t: f64) -> Result<ADensity> {
    check_before_maturity(t, spec.horizon)?;
    if !(t > 0.0) {
        return invalid("Arrow-Debreu density needs t > 0");
    }
    Ok(ADensity { t, spec: spec.clone(), discount: curve.discount(t), tol: Tolerance::rel(1e-9) })
}

/// Payout of an information derivative as a function of `xi_t`, with the
/// points where it fails to be smooth.
#[derive(Clone)]
pub struct PayoffFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub breakpoints: Vec<f64>,
}

impl std::fmt::Debug for PayoffFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PayoffFunction").field("breakpoints", &self.breakpoints).finish()
    }
}

impl PayoffFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PayoffFunction { f: Arc::new(f), breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, breakpoints: Vec<f64>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// `V_0 = int A_0t(x) g(x) dx`.
pub fn price_info_derivative(ad: &ADensity, g: &PayoffFunction) -> Result<f64> {
    let mut breaks = ad.breaks();
    let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
    breaks.extend(g.breakpoints.iter().copied().filter(|x| *x > lo && *x < hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |x: f64| match ad.undiscounted(x) {
        Ok(a) => a * g.eval(x),
        Err(_) => f64::NAN,
    };
    Ok(ad.discount * quad::integrate_pieces(&integrand, &breaks, ad.tol)?.value)
}

/// `(B_tT(x) - K)^+` for a call on a discrete-payoff bond, kinked at the
/// critical information level.
pub fn bond_call_payoff(opt: &OptionSpec) -> Result<PayoffFunction> {
    let p = opt.forward_discount();
    let (payoff, spec, strike, t) = (opt.payoff.clone(), opt.spec.clone(), opt.strike, opt.expiry);
    let kink = match opt.strike_region() {
        StrikeRegion::Interior if spec.sigma > 0.0 => vec![bond_critical_information(opt)?],
        _ => Vec::new(),
    };
    let g = move |x: f64| match conditional_mean(&payoff, &spec, t, x) {
        Ok(m) => (p * m - strike).max(0.0),
        Err(_) => f64::NAN,
    };
    Ok(PayoffFunction::new(g).with_breakpoints(kink))
}

/// Call on a single-dividend asset priced by integrating against the
/// Arrow-Debreu density, written in terms of the dividend prior.
pub fn price_continuous_call_via_ad(asset: &SingleDividendAsset, strike: f64, t: f64) -> Result<f64> {
    if !(strike > 0.0) {
        return invalid("strike must be positive");
    }
    let big_t = asset.maturity;
    let p0t = asset.curve.discount(t);
    let ptt = asset.curve.forward_discount(t, big_t);
    let Some(x_star) = asset_critical_information(asset, strike, t)? else {
        let (lo, _) = asset.prior.support();
        return Ok(if strike <= ptt * lo { p0t * (ptt * asset.prior.mean() - strike) } else { 0.0 });
    };
    let s = (t * (big_t - t) / big_t).sqrt();
    let shift = asset.sigma * t;
    let in_money = |z: f64| cdf(-(x_star - shift * z) / s);
    let mut breaks = prior_breaks(&asset.prior);
    if shift > 0.0 {
        let z = x_star / shift;
        if z > breaks[0] && z < breaks[breaks.len() - 1] {
            breaks.push(z);
            breaks.sort_by(f64::total_cmp);
        }
    }
    let tol = Tolerance::rel(1e-12);
    let prior = &asset.prior;
    let first = quad::integrate_pieces(&|z| prior.pdf(z) * z * in_money(z), &breaks, tol)?.value;
    let second = quad::integrate_pieces(&|z| prior.pdf(z) * in_money(z), &breaks, tol)?.value;
    Ok(p0t * (ptt * first - strike * second))
}

/// Joint density of `(xi_t1, xi_t2)` for a discrete factor.
#[derive(Debug, Clone)]
pub struct BivariateDensity {
    pub t1: f64,
    pub t2: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub payoff: DiscretePayoff,
    tol: Tolerance,
}

/// Bivariate intertemporal density; `t1` must be strictly before `t2`.
pub fn bivariate_ad_density(
    spec: &InformationProcessSpec,
    payoff: &DiscretePayoff,
    t1: f64,
    t2: f64,
) -> Result<BivariateDensity> {
    check_before_maturity(t2, spec.horizon)?;
    if !(t1 > 0.0 && t1 < t2) {
        return invalid("bivariate density needs 0 < t1 < t2");
    }
    Ok(BivariateDensity {
        t1,
        t2,
        sigma: spec.sigma,
        horizon: spec.horizon,
        payoff: payoff.clone(),
        tol: Tolerance::rel(1e-11),
    })
}

impl BivariateDensity {
    /// Variance of `xi_t1` given `xi_t2`.
    pub fn conditional_var(&self) -> f64 {
        self.t1 * (self.t2 - self.t1) / self.t2
    }

    /// Density of `xi_t2` alone.
    pub fn marginal(&self, x2: f64) -> f64 {
        let big_t = self.horizon;
        let c = big_t / (2.0 * self.t2 * (big_t - self.t2));
        let mix: f64 = self
            .payoff
            .levels()
            .iter()
            .zip(self.payoff.probs())
            .map(|(h, p)| p * (-c * (x2 - self.sigma * h * self.t2).powi(2)).exp())
            .sum();
        mix * (c / std::f64::consts::PI).sqrt()
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let v = self.conditional_var();
        let d = x1 - self.t1 / self.t2 * x2;
        (-0.5 * d * d / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt() * self.marginal(x2)
    }

    /// `int int A(x1, x2) g(x1, x2) dx1 dx2`, undiscounted.
    pub fn expect<G: Fn(f64, f64) -> f64>(&self, g: G) -> Result<f64> {
        let big_t = self.horizon;
        let s2 = (self.t2 * (big_t - self.t2) / big_t).sqrt();
        let h = self.payoff.levels();
        let shift = self.sigma * self.t2;
        let (lo, hi) = (shift * h[0] - TRUNCATION_SD * s2, shift * h[h.len() - 1] + TRUNCATION_SD * s2);
        let mut outer = vec![lo, hi];
        outer.extend(h.iter().map(|x| shift * x));
        outer.sort_by(f64::total_cmp);
        outer.dedup();
        let sd1 = self.conditional_var().sqrt();
        let inner = |x2: f64| {
            let m = self.t1 / self.t2 * x2;
            let breaks = [m - TRUNCATION_SD * sd1, m, m + TRUNCATION_SD * sd1];
            quad::integrate_pieces(&|x1| self.eval(x1, x2) * g(x1, x2), &breaks, self.tol)
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        };
        Ok(quad::integrate_pieces(&inner, &outer, self.tol)?.value)
    }
}

/// Density of the information process under a continuous prior, convenient
/// for tabulating.
pub fn tabulate(ad: &ADensity, points: &[f64]) -> Result<Vec<(f64, f64)>> {
    points.iter().map(|&x| Ok((x, ad.discounted(x)?))).collect()
}
