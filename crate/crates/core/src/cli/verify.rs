//! Built-in cross-check suite spanning every pricing module.

use rand::Rng;

use super::rates::{record_checks, term_structure_report};
use super::{Checks, CliError, Context};
use crate::arrow_debreu::{ad_density, bond_call_payoff, price_info_derivative};
use crate::credit::{digital_decomposition, price_bond, reinitialize};
use crate::curve::DiscountCurve;
use crate::equity::{
    bs_recovery_price, bs_recovery_vol, price_exponential_closed, price_gamma_closed, price_single_dividend_quadrature,
    SingleDividendAsset,
};
use crate::options::{price_binary_call, OptionSpec};
use crate::process::{conditional_probs, ContinuousDensity, DiscretePayoff, InformationProcessSpec};
use crate::rates::inflation::{InflationModel, Preferences};
use crate::rates::kernel::RationalModelSpec;
use crate::rates::lattice::ScenarioTree;
use crate::rng::stream;
use crate::xfactor::{price_coupon_bond, CouponBond, MarketScenario};
use crate::zfactor::{build_reduction, joint_from_x_probs, x_probs_from_joint, JointDistribution};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn filtering(checks: &mut Checks, seed: u64) -> crate::Result<()> {
    let payoff = DiscretePayoff::new(vec![0.2, 0.6, 1.0], vec![0.15, 0.25, 0.6])?;
    let big_t = 2.0;
    let mut rng = stream(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let sigma = rng.random_range(0.05..2.0);
        let t = rng.random_range(0.0..1.9);
        let h = payoff.levels()[rng.random_range(0..3)];
        let xi = sigma * h * t + rng.random_range(-1.0..1.0) * (t * (big_t - t) / big_t).sqrt();
        let spec = InformationProcessSpec::discrete(sigma, big_t, payoff.clone())?;
        let got = conditional_probs(&payoff, &spec, t, xi)?;
        // Bayes with the Gaussian bridge likelihood of xi given H = h
        let var = t * (big_t - t) / big_t;
        let like: Vec<f64> = payoff
            .levels()
            .iter()
            .zip(payoff.probs())
            .map(|(h, p)| p * (-(xi - sigma * h * t).powi(2) / (2.0 * var)).exp())
            .collect();
        let z: f64 = like.iter().sum();
        if t > 0.0 && z > 1e-200 {
            for (g, l) in got.iter().zip(&like) {
                worst = worst.max((g - l / z).abs());
            }
        }
    }
    checks.record("filtering_vs_bayes", worst, 1e-12);
    Ok(())
}

fn credit(checks: &mut Checks) -> crate::Result<()> {
    let curve = DiscountCurve::flat(0.05)?;
    let payoff = DiscretePayoff::binary(0.3, 1.0, 0.8)?;
    let spec = InformationProcessSpec::discrete(0.4, 3.0, payoff.clone())?;
    let (mut digital, mut reinit): (f64, f64) = (0.0, 0.0);
    for (t, xi) in [(0.5, 0.1), (1.2, 0.6), (2.5, -0.3), (2.9, 1.1)] {
        let direct = price_bond(&payoff, &spec, &curve, t, xi)?.price;
        digital = digital.max((digital_decomposition(&payoff, &spec, &curve, t, xi)?.reconstructed - direct).abs());
        if t < 2.5 {
            let re = reinitialize(&spec, &payoff, t, xi)?;
            let (u, xi_u) = (t + 0.3, xi + 0.2);
            let a = re.conditional_probs_at(u, xi_u)?;
            let b = conditional_probs(&payoff, &spec, u, xi_u)?;
            reinit = reinit.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
    }
    checks.record("digital_decomposition", digital, 1e-12);
    checks.record("dynamic_consistency", reinit, 1e-12);

    let opt = OptionSpec::new(0.7, 1.0, payoff.clone(), spec, curve)?;
    let closed = price_binary_call(&opt)?;
    let ad = ad_density(&opt.spec, &opt.curve, opt.expiry)?;
    let via_ad = price_info_derivative(&ad, &bond_call_payoff(&opt)?)?;
    checks.record("binary_call_vs_arrow_debreu", rel(via_ad, closed), 1e-8);
    Ok(())
}

fn equity(checks: &mut Checks) -> crate::Result<()> {
    let curve = DiscountCurve::flat(0.03)?;
    let exp_asset = SingleDividendAsset::new(ContinuousDensity::exponential(1.5)?, 0.3, 2.0, curve.clone())?;
    let gamma_asset = SingleDividendAsset::new(ContinuousDensity::gamma(2.0, 4)?, 0.3, 2.0, curve)?;
    let (mut e, mut g): (f64, f64) = (0.0, 0.0);
    for (t, xi) in [(0.0, 0.0), (0.5, 0.2), (1.0, -0.4), (1.8, 1.3)] {
        e = e.max(rel(price_exponential_closed(&exp_asset, t, xi)?, price_single_dividend_quadrature(&exp_asset, t, xi)?));
        g = g.max(rel(price_gamma_closed(&gamma_asset, t, xi)?, price_single_dividend_quadrature(&gamma_asset, t, xi)?));
    }
    checks.record("exponential_closed_form", e, 1e-8);
    checks.record("gamma_closed_form", g, 1e-8);

    let (s0, r, nu, big_t): (f64, f64, f64, f64) = (100.0, 0.04, 0.25, 4.0);
    let sigma = 1.0 / big_t.sqrt();
    let (mut price, mut vol): (f64, f64) = (0.0, 0.0);
    for (t, xi) in [(0.5, 0.3), (2.0, -0.8), (3.5, 1.4)] {
        let want = s0 * (r * t + nu * xi - 0.5 * nu * nu * t).exp();
        price = price.max(rel(bs_recovery_price(s0, r, nu, big_t, sigma, t, xi)?, want));
        vol = vol.max((bs_recovery_vol(nu, big_t, sigma, t) - nu).abs());
    }
    checks.record("black_scholes_recovery_price", price, 1e-12);
    checks.record("black_scholes_recovery_vol", vol, 1e-14);
    Ok(())
}

fn xfactor(checks: &mut Checks) -> crate::Result<()> {
    let curve = DiscountCurve::flat(0.04)?;
    let bond = CouponBond {
        coupon: 0.05,
        principal: 1.0,
        dates: vec![1.0, 2.0, 3.0],
        recovery: vec![0.4, 0.35, 0.3],
        default_probs: vec![0.05, 0.07, 0.1],
        sigmas: vec![0.3, 0.3, 0.3],
    };
    let value = price_coupon_bond(&bond, &MarketScenario::new(0.0), &curve)?;
    // survival-weighted cash flows with recovery on the first default
    let (c, p) = (bond.coupon, bond.principal);
    let mut alive = 1.0;
    let mut want = 0.0;
    for k in 0..3 {
        let s = 1.0 - bond.default_probs[k];
        let paid = if k == 2 { c + p } else { c };
        want += curve.discount(bond.dates[k]) * (paid * alive * s + bond.recovery[k] * (c + p) * alive * (1.0 - s));
        alive *= s;
    }
    checks.record("coupon_bond_vs_enumeration", (value - want).abs(), 1e-13);
    Ok(())
}

fn zfactor(checks: &mut Checks) -> crate::Result<()> {
    let probs = vec![0.1, 0.05, 0.2, 0.15, 0.12, 0.08, 0.17, 0.13];
    let joint = JointDistribution::new(3, probs)?;
    let x = x_probs_from_joint(&joint)?;
    let back = joint_from_x_probs(&build_reduction(3)?, &x)?;
    let err = joint.probs.iter().zip(&back.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.record("reduction_round_trip", err, 1e-13);
    Ok(())
}

fn rates(checks: &mut Checks) -> crate::Result<()> {
    let depth = 8;
    let spec = RationalModelSpec {
        alpha: (0..=depth).map(|i| 0.6 * 0.96f64.powi(i)).collect(),
        beta: (0..=depth).map(|i| 0.4 * 0.92f64.powi(i)).collect(),
        n0: 1.0,
        up: 1.2,
        down: 0.85,
        dates: None,
    };
    let model = spec.model()?;
    record_checks(&term_structure_report(&model, Some(&spec))?, checks);

    let tree = ScenarioTree::binomial(5, 0.5)?;
    let k = tree.process(|level, node| 1.0 + 0.02 * level as f64 + 0.01 * ScenarioTree::up_moves(node) as f64);
    let m = tree.process(|level, node| 1.0 + 0.03 * level as f64 + 0.02 * ScenarioTree::up_moves(node) as f64);
    let l = tree.process(|_, _| 0.05);
    let prefs = Preferences { a: 1.0, b: 0.2, gamma: 0.03, mu: 1.5 };
    let infl = InflationModel::new(tree, (0..=5).map(f64::from).collect(), k, m, l, prefs)?;
    checks.record("velocity_identity", infl.velocity_residual(), 1e-14);
    let nominal = infl.index_linked_bond(4)?;
    let real = infl.real_bond(4)?;
    let worst = (1..nominal.len()).map(|k| rel(nominal[k], infl.price_level[k] * real[k])).fold(0.0, f64::max);
    checks.record("index_linked_identity", worst, 1e-13);
    Ok(())
}

pub fn run_suite(checks: &mut Checks, seed: u64) -> crate::Result<()> {
    filtering(checks, seed)?;
    credit(checks)?;
    equity(checks)?;
    xfactor(checks)?;
    zfactor(checks)?;
    rates(checks)
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    run_suite(&mut ctx.checks, ctx.cli.seed)?;
    ctx.output.json("verify_report", &ctx.checks)?;
    Ok(())
}
