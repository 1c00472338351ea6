//! Assets paying a single continuously distributed dividend.

use crate::curve::DiscountCurve;
use crate::error::{invalid, Result};
use crate::numerics::normal::{cdf, erfcx, inv_mills, SQRT_2PI};
use crate::numerics::quad::{self, Tolerance};
use crate::numerics::root::{bisect_increasing, bracket_increasing};
use crate::numerics::binomial;
use crate::process::{
    check_before_maturity, conditional_density, ContinuousDensity, InformationProcessSpec, Posterior,
};

/// Largest tolerated ratio between the absolute terms of a binomial F-sum and
/// the sum itself before the closed form is abandoned for quadrature.
pub const CANCELLATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleDividendAsset {
    pub prior: ContinuousDensity,
    pub sigma: f64,
    pub maturity: f64,
    pub curve: DiscountCurve,
}

impl SingleDividendAsset {
    pub fn new(prior: ContinuousDensity, sigma: f64, maturity: f64, curve: DiscountCurve) -> Result<Self> {
        InformationProcessSpec::continuous(sigma, maturity, prior.clone())?;
        Ok(SingleDividendAsset { prior, sigma, maturity, curve })
    }

    pub fn spec(&self) -> InformationProcessSpec {
        InformationProcessSpec {
            sigma: self.sigma,
            horizon: self.maturity,
            factor: crate::process::Factor::Continuous(self.prior.clone()),
        }
    }

    pub fn posterior(&self, t: f64, xi: f64) -> Result<Posterior> {
        conditional_density(&self.prior, &self.spec(), t, xi)
    }

    /// `(A_t, B_t)` of the exponent `-A x^2 / 2 + B x` without the prior's own slope.
    fn exponent(&self, t: f64, xi: f64) -> (f64, f64) {
        let scale = self.maturity / (self.maturity - t);
        (self.sigma * self.sigma * t * scale, self.sigma * scale * xi)
    }
}

/// `S_t = P_tT E[D_T | xi_t]`; zero on and after the payment date.
pub fn price_single_dividend(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<f64> {
    if t >= asset.maturity {
        return Ok(0.0);
    }
    let mean = asset.posterior(t, xi)?.mean()?;
    Ok(asset.curve.forward_discount(t, asset.maturity) * mean)
}

/// Same price with the posterior mean computed by adaptive quadrature.
pub fn price_single_dividend_quadrature(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<f64> {
    if t >= asset.maturity {
        return Ok(0.0);
    }
    let (mean, _) = asset.posterior(t, xi)?.quadrature_moments()?;
    Ok(asset.curve.forward_discount(t, asset.maturity) * mean)
}

/// Closed form for an exponentially distributed dividend with mean `delta`.
pub fn price_exponential_closed(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<f64> {
    let ContinuousDensity::Exponential { mean: delta } = asset.prior else {
        return invalid("exponential closed form needs an exponential prior");
    };
    check_before_maturity(t, asset.maturity)?;
    let p = asset.curve.forward_discount(t, asset.maturity);
    let (a, b_raw) = asset.exponent(t, xi);
    if a == 0.0 {
        return Ok(p * delta);
    }
    let b = b_raw - 1.0 / delta;
    let y = b / a.sqrt();
    Ok(p * (b / a + inv_mills(y) / a.sqrt()))
}

/// `F_k(x) = int_x^inf z^k exp(-z^2/2) dz` for `k = 0..=kmax` by upward recursion.
pub fn f_table(x: f64, kmax: usize) -> Vec<f64> {
    let g = (-0.5 * x * x).exp();
    let mut f = vec![SQRT_2PI * cdf(-x), g];
    for k in 0..kmax.saturating_sub(1) {
        f.push((k + 1) as f64 * f[k] + x.powi(k as i32 + 1) * g);
    }
    f.truncate(kmax + 1);
    f
}

/// `exp(x^2/2) F_k(x)`, free of underflow for large positive `x`.
pub fn f_table_scaled(x: f64, kmax: usize) -> Vec<f64> {
    let g0 = (std::f64::consts::PI / 2.0).sqrt() * erfcx(x / std::f64::consts::SQRT_2);
    let mut f = vec![g0, 1.0];
    for k in 0..kmax.saturating_sub(1) {
        f.push((k + 1) as f64 * f[k] + x.powi(k as i32 + 1));
    }
    f.truncate(kmax + 1);
    f
}

/// Auxiliary quantities of the gamma closed form at `(t, xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaAux {
    pub a: f64,
    pub b: f64,
    /// `F_k(-B/sqrt(A))`, scaled by `exp(B^2/(2A))` when `B < 0`.
    pub f: Vec<f64>,
    pub scaled: bool,
}

impl GammaAux {
    pub fn new(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<Self> {
        let ContinuousDensity::Gamma { rate, shape } = asset.prior else {
            return invalid("gamma auxiliaries need a gamma prior");
        };
        check_before_maturity(t, asset.maturity)?;
        let (a, b_raw) = asset.exponent(t, xi);
        if a == 0.0 {
            return invalid("A_t vanishes at t = 0 or sigma = 0");
        }
        let b = b_raw - rate;
        let x = -b / a.sqrt();
        let kmax = shape as usize + 1;
        let scaled = x > 0.0;
        let f = if scaled { f_table_scaled(x, kmax) } else { f_table(x, kmax) };
        Ok(GammaAux { a, b, f, scaled })
    }

    /// `sum_j C(k, j) y^(k-j) F_j(-y)` with `y = B / sqrt(A)`, or `None` when
    /// the terms cancel beyond `CANCELLATION_LIMIT`.
    fn binomial_sum(&self, k: usize) -> Option<f64> {
        let y = self.b / self.a.sqrt();
        let mut sum = 0.0;
        let mut size = 0.0;
        for j in 0..=k {
            let term = binomial(k, j) * y.powi((k - j) as i32) * self.f[j];
            sum += term;
            size += term.abs();
        }
        if !(sum > 0.0) || size > CANCELLATION_LIMIT * sum {
            return None;
        }
        Some(sum)
    }
}

pub(crate) fn gamma_posterior_moments(a: f64, b: f64, shape: u32) -> Option<(f64, f64)> {
    let x = -b / a.sqrt();
    let n = shape as usize;
    let scaled = x > 0.0;
    let f = if scaled { f_table_scaled(x, n + 1) } else { f_table(x, n + 1) };
    let aux = GammaAux { a, b, f, scaled };
    let j0 = aux.binomial_sum(n - 1)?;
    let j1 = aux.binomial_sum(n)?;
    let j2 = aux.binomial_sum(n + 1)?;
    let mean = j1 / (j0 * a.sqrt());
    let second = j2 / (j0 * a);
    Some((mean, second - mean * mean))
}

/// Closed form for a gamma dividend `p(x) = rate^n x^(n-1) e^(-rate x)/(n-1)!`,
/// falling back to quadrature when the binomial sums cancel.
pub fn price_gamma_closed(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<f64> {
    let ContinuousDensity::Gamma { rate, shape } = asset.prior else {
        return invalid("gamma closed form needs a gamma prior");
    };
    check_before_maturity(t, asset.maturity)?;
    let p = asset.curve.forward_discount(t, asset.maturity);
    if t == 0.0 || asset.sigma == 0.0 {
        return Ok(p * shape as f64 / rate);
    }
    let aux = GammaAux::new(asset, t, xi)?;
    let n = shape as usize;
    match (aux.binomial_sum(n), aux.binomial_sum(n - 1)) {
        (Some(num), Some(den)) => Ok(p * num / (den * aux.a.sqrt())),
        _ => price_single_dividend_quadrature(asset, t, xi),
    }
}

/// Whether `price_gamma_closed` evaluates its binomial sums rather than
/// falling back to quadrature at `(t, xi)`.
pub fn gamma_closed_form_applies(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<bool> {
    let ContinuousDensity::Gamma { shape, .. } = asset.prior else {
        return invalid("gamma closed form needs a gamma prior");
    };
    check_before_maturity(t, asset.maturity)?;
    if t == 0.0 || asset.sigma == 0.0 {
        return Ok(true);
    }
    let aux = GammaAux::new(asset, t, xi)?;
    let n = shape as usize;
    Ok(aux.binomial_sum(n).is_some() && aux.binomial_sum(n - 1).is_some())
}

/// `(drift, absolute volatility)` of the price process at `(t, xi)`.
pub fn asset_dynamics_coeffs(asset: &SingleDividendAsset, t: f64, xi: f64) -> Result<(f64, f64)> {
    let post = asset.posterior(t, xi)?;
    let (mean, var) = post.moments()?;
    let p = asset.curve.forward_discount(t, asset.maturity);
    let drift = asset.curve.short_rate(t) * p * mean;
    let vol = p * asset.sigma * asset.maturity / (asset.maturity - t) * var;
    Ok((drift, vol))
}

/// Finite break points covering the prior mass to about `exp(-60)`.
pub(crate) fn prior_breaks(prior: &ContinuousDensity) -> Vec<f64> {
    let (lo, hi) = prior.support();
    let (m, sd) = (prior.mean(), prior.variance().sqrt());
    let lo = if lo.is_finite() { lo } else { m - 40.0 * sd };
    let hi = if hi.is_finite() { hi } else { m + 80.0 * sd };
    let mut b = vec![lo, hi];
    for x in prior.kinks().into_iter().chain([m, m - sd, m + sd]) {
        if x > lo && x < hi {
            b.push(x);
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Information value at `t` for which the asset price equals `strike`; `None`
/// when the strike lies outside the attainable price range.
pub fn critical_information(asset: &SingleDividendAsset, strike: f64, t: f64) -> Result<Option<f64>> {
    check_before_maturity(t, asset.maturity)?;
    if t == 0.0 {
        return invalid("critical information needs t > 0");
    }
    let p = asset.curve.forward_discount(t, asset.maturity);
    let (lo, hi) = asset.prior.support();
    if strike <= p * lo || strike >= p * hi {
        return Ok(None);
    }
    let f = |xi: f64| match price_single_dividend(asset, t, xi) {
        Ok(s) => s - strike,
        Err(_) => f64::NAN,
    };
    let width = 50.0 * (t * (asset.maturity - t) / asset.maturity).sqrt();
    let centre = asset.sigma * t * strike / p;
    let (a, b) = bracket_increasing(&f, centre, width)?;
    Ok(Some(bisect_increasing(f, a, b, 1e-13)?))
}

fn boundary_call(asset: &SingleDividendAsset, strike: f64, t: f64) -> f64 {
    let p = asset.curve.forward_discount(t, asset.maturity);
    let (lo, _) = asset.prior.support();
    if strike <= p * lo {
        asset.curve.discount(asset.maturity) * asset.prior.mean() - asset.curve.discount(t) * strike
    } else {
        0.0
    }
}

/// European call with expiry `t` priced under the bridge measure.
pub fn price_call_bridge_measure(asset: &SingleDividendAsset, strike: f64, t: f64) -> Result<f64> {
    if !(strike > 0.0) {
        return invalid("strike must be positive");
    }
    let Some(xi_star) = critical_information(asset, strike, t)? else {
        return Ok(boundary_call(asset, strike, t));
    };
    let big_t = asset.maturity;
    let z_star = xi_star * (big_t / (t * (big_t - t))).sqrt();
    let root_tau = (t * big_t / (big_t - t)).sqrt();
    let mut breaks = prior_breaks(&asset.prior);
    if asset.sigma > 0.0 {
        let centre = z_star / (asset.sigma * root_tau);
        if centre > breaks[0] && centre < breaks[breaks.len() - 1] {
            breaks.push(centre);
            breaks.sort_by(f64::total_cmp);
        }
    }
    let tol = Tolerance::rel(1e-12);
    let weight = |x: f64| asset.prior.pdf(x) * cdf(asset.sigma * x * root_tau - z_star);
    let first = quad::integrate_pieces(&|x| x * weight(x), &breaks, tol)?.value;
    let second = quad::integrate_pieces(&weight, &breaks, tol)?.value;
    Ok(asset.curve.discount(big_t) * first - asset.curve.discount(t) * strike * second)
}

/// `(2 pi)^(-1/2) int exp(-x^2/2) exp(a x - b x^2) dx`.
pub fn gaussian_exp_integral(a: f64, b: f64) -> f64 {
    let k = 2.0 * b + 1.0;
    (a * a / (2.0 * k)).exp() / k.sqrt()
}

/// `(2 pi)^(-1/2) int x exp(-x^2/2) exp(a x - b x^2) dx`.
pub fn gaussian_exp_first_moment(a: f64, b: f64) -> f64 {
    let k = 2.0 * b + 1.0;
    a / k.powf(1.5) * (a * a / (2.0 * k)).exp()
}

/// Price of the asset paying `S0 exp(rT - nu^2 T/2 + nu sqrt(T) X)` at `T`,
/// with `X` standard normal and a flat rate `r`.
pub fn bs_recovery_price(s0: f64, r: f64, nu: f64, maturity: f64, sigma: f64, t: f64, xi: f64) -> Result<f64> {
    check_before_maturity(t, maturity)?;
    let tau = t * maturity / (maturity - t);
    let a = sigma * maturity * xi / (maturity - t);
    let b = 0.5 * sigma * sigma * tau;
    let c = nu * maturity.sqrt();
    let k = 2.0 * b + 1.0;
    // ratio of the completed-square integrals at (a + c, b) and (a, b)
    let log_ratio = (2.0 * a * c + c * c) / (2.0 * k);
    Ok(s0 * (r * t - 0.5 * nu * nu * maturity + log_ratio).exp())
}

/// Deterministic volatility of the recovered price process.
pub fn bs_recovery_vol(nu: f64, maturity: f64, sigma: f64, t: f64) -> f64 {
    nu * sigma * maturity.powf(1.5) / (maturity + (sigma * sigma * maturity - 1.0) * t)
}
