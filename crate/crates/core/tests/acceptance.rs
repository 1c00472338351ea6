//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use rayon::prelude::*;

use infoflow::arrow_debreu::{
    ad_density, bivariate_ad_density, bond_call_payoff, price_continuous_call_via_ad, price_info_derivative,
    PayoffFunction,
};
use infoflow::credit::{digital_decomposition, price_bond, reinitialize};
use infoflow::equity::{
    bs_recovery_price, bs_recovery_vol, f_table, f_table_scaled, price_call_bridge_measure, price_exponential_closed,
    price_gamma_closed, price_single_dividend, price_single_dividend_quadrature, SingleDividendAsset,
};
use infoflow::options::{
    binary_call_from_bond_price, greeks, price_binary_call, OptionSpec, StrikeRegion,
};
use infoflow::process::{conditional_probs, information_path_at};
use infoflow::rates::inflation::{InflationModel, Preferences};
use infoflow::rates::kernel::{doob_decomposition, fh_representation, money_market, RationalModelSpec};
use infoflow::rates::ScenarioTree;
use infoflow::xfactor::{
    homogeneous_basket_value, price_asset, price_basket, price_cds, price_coupon_bond, volatility_vector, Basket,
    CashFlow, CashFlowGraph, CouponBond, CreditDefaultSwap, Expr, HomogeneousBasket, MarketScenario, XFactor,
};
use infoflow::zfactor::{build_reduction, joint_from_x_probs, sample_pattern_counts, x_probs_from_joint, JointDistribution};
use infoflow::{ContinuousDensity, DiscountCurve, DiscretePayoff, Factor, InformationProcessSpec, TimeGrid};

/// Collects the checks of one criterion and prints a single verdict line.
struct Criterion {
    id: u32,
    name: &'static str,
    start: Instant,
    budget: Duration,
    notes: Vec<String>,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str, budget_secs: u64) -> Self {
        Criterion {
            id,
            name,
            start: Instant::now(),
            budget: Duration::from_secs(budget_secs),
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Passes when `value < tol`.
    fn below(&mut self, label: &str, value: f64, tol: f64) {
        let line = format!("{label}={value:.3e}<{tol:.0e}");
        if value < tol {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn holds(&mut self, label: &str, ok: bool, detail: String) {
        let line = format!("{label}: {detail}");
        if ok {
            self.notes.push(line);
        } else {
            self.failures.push(line);
        }
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        let timing = format!("time={:.2}s<{}s", elapsed.as_secs_f64(), self.budget.as_secs());
        if elapsed < self.budget {
            self.notes.push(timing);
        } else {
            self.failures.push(timing);
        }
        let ok = self.failures.is_empty();
        let body = if ok { self.notes.join(", ") } else { self.failures.join(", ") };
        let line = format!("{} criterion {:02} {}: {}\n", if ok { "PASS" } else { "FAIL" }, self.id, self.name, body);
        // written past the test harness capture so every verdict shows up
        let mut out = std::io::stdout().lock();
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
        assert!(ok, "{line}");
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Posterior over a finite spectrum from the Gaussian likelihood of `xi_t`.
fn bayes(levels: &[f64], probs: &[f64], sigma: f64, horizon: f64, t: f64, xi: f64) -> Vec<f64> {
    let var = t * (horizon - t) / horizon;
    let joint: Vec<f64> = levels
        .iter()
        .zip(probs)
        .map(|(h, p)| p * (-(xi - sigma * h * t).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
        .collect();
    let z: f64 = joint.iter().sum();
    joint.iter().map(|j| j / z).collect()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `(mean, standard error)` of a sample.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn normal_draws(seed: u64, n: usize) -> Vec<f64> {
    const CHUNK: usize = 1 << 15;
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(move |_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>()
        })
        .collect()
}

#[test]
fn criterion_01_filtering() {
    let mut c = Criterion::new(1, "filtering", 1);
    let payoff = DiscretePayoff::new(vec![0.1, 0.45, 1.0], vec![0.2, 0.3, 0.5]).unwrap();
    let big_t = 2.0;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for i in 0..10 {
        let t = 0.1 + 0.18 * i as f64;
        for j in 0..10 {
            let sigma = 0.1 + 0.3 * j as f64;
            let spec = InformationProcessSpec::discrete(sigma, big_t, payoff.clone()).unwrap();
            let sd = (t * (big_t - t) / big_t).sqrt();
            for k in 0..10 {
                let xi = sigma * 0.5 * t + (-3.0 + 6.0 * k as f64 / 9.0) * sd;
                let got = conditional_probs(&payoff, &spec, t, xi).unwrap();
                let want = bayes(payoff.levels(), payoff.probs(), sigma, big_t, t, xi);
                for (g, w) in got.iter().zip(&want) {
                    worst = worst.max((g - w).abs());
                }
                points += 1;
            }
        }
    }
    c.holds("grid", points == 1000, format!("{points} points"));
    c.below("max_abs_err", worst, 1e-12);
    c.finish();
}

#[test]
fn criterion_02_bond_martingale() {
    let mut c = Criterion::new(2, "bond_price_martingale", 30);
    let payoff = DiscretePayoff::binary(0.3, 1.0, 0.8).unwrap();
    let big_t = 4.0;
    let spec = InformationProcessSpec::discrete(0.5, big_t, payoff.clone()).unwrap();
    let curve = DiscountCurve::flat(0.03).unwrap();
    let times = vec![0.5, 1.0, 2.0, 3.0, 3.9];
    let grid = TimeGrid::new([0.0].into_iter().chain(times.clone()).collect(), big_t).unwrap();
    let paths = 100_000u64;
    // per path: deflated price and conditional variance at each time
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let path = information_path_at(&spec, &grid, 11, i).unwrap();
            let mut deflated = Vec::new();
            let mut var = Vec::new();
            for (t, xi) in times.iter().zip(&path.values[1..]) {
                let state = price_bond(&payoff, &spec, &curve, *t, *xi).unwrap();
                deflated.push(curve.discount(*t) * state.price);
                var.push(state.cond_var);
            }
            (deflated, var)
        })
        .collect();
    let b0 = curve.discount(big_t) * payoff.mean();
    let mut worst_z: f64 = 0.0;
    for (k, _) in times.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s.0[k]).collect();
        let (m, se) = mean_se(&xs);
        worst_z = worst_z.max((m - b0).abs() / se);
    }
    c.below("deflated_price_max_z", worst_z, 3.0);
    // E[V_s] - E[V_t] >= 0 for s < t, starting from the prior variance
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..times.len() {
        let v: Vec<f64> = samples.iter().map(|s| s.1[k]).collect();
        let diffs: Vec<f64> = match &prev {
            Some(p) => v.iter().zip(p).map(|(a, b)| a - b).collect(),
            None => v.iter().map(|a| a - payoff.variance()).collect(),
        };
        let (m, se) = mean_se(&diffs);
        worst_rise = worst_rise.max(m / se.max(1e-300));
        prev = Some(v);
    }
    c.below("conditional_variance_rise_z", worst_rise, 3.0);
    c.finish();
}

fn random_binary(rng: &mut ChaCha8Rng) -> DiscretePayoff {
    let h0 = rng.random_range(0.0..0.8);
    let h1 = h0 + rng.random_range(0.05..1.0);
    DiscretePayoff::binary(h0, h1, rng.random_range(0.02..0.98)).unwrap()
}

#[test]
fn criterion_03_digital_decomposition() {
    let mut c = Criterion::new(3, "digital_decomposition", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let payoff = random_binary(&mut rng);
        let big_t = rng.random_range(0.5..10.0);
        let sigma = rng.random_range(0.01..3.0);
        let t = rng.random_range(0.0..0.98) * big_t;
        let curve = DiscountCurve::flat(rng.random_range(0.0..0.1)).unwrap();
        let spec = InformationProcessSpec::discrete(sigma, big_t, payoff.clone()).unwrap();
        let h = payoff.levels()[usize::from(rng.random_bool(0.5))];
        let sd = (t * (big_t - t) / big_t).sqrt();
        let xi = sigma * h * t + rng.random_range(-3.0..3.0) * sd;
        let direct = price_bond(&payoff, &spec, &curve, t, xi).unwrap().price;
        let split = digital_decomposition(&payoff, &spec, &curve, t, xi).unwrap();
        worst = worst.max((split.reconstructed - direct).abs());
    }
    c.below("max_abs_err", worst, 1e-12);
    c.finish();
}

#[test]
fn criterion_04_dynamic_consistency() {
    let mut c = Criterion::new(4, "dynamic_consistency", 1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..6);
        let mut levels: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.5)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let w: Vec<f64> = levels.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let payoff = DiscretePayoff::new(levels, w.iter().map(|x| x / total).collect()).unwrap();
        let big_t = rng.random_range(1.0..8.0);
        let sigma = rng.random_range(0.05..2.0);
        let spec = InformationProcessSpec::discrete(sigma, big_t, payoff.clone()).unwrap();
        let t = rng.random_range(0.05..0.7) * big_t;
        let u = t + rng.random_range(0.05..0.95) * (big_t - t);
        let xi_t = sigma * payoff.mean() * t + rng.random_range(-2.0..2.0) * (t * (big_t - t) / big_t).sqrt();
        let xi_u = xi_t + sigma * payoff.mean() * (u - t) + rng.random_range(-2.0..2.0) * (u - t).sqrt();
        let restarted = reinitialize(&spec, &payoff, t, xi_t).unwrap();
        let a = restarted.conditional_probs_at(u, xi_u).unwrap();
        let b = conditional_probs(&payoff, &spec, u, xi_u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    c.below("max_abs_err", worst, 1e-12);
    c.finish();
}

/// Call on the bond under the bridge measure, where `xi_t` is centred Gaussian.
fn bridge_mc_call(opt: &OptionSpec, normals: &[f64]) -> (f64, f64) {
    let (t, big_t) = (opt.expiry, opt.maturity());
    let sd = (t * (big_t - t) / big_t).sqrt();
    let tau = t * big_t / (big_t - t);
    let p_tt = opt.curve.forward_discount(t, big_t);
    let sigma = opt.spec.sigma;
    let levels = opt.payoff.levels();
    let probs = opt.payoff.probs();
    let values: Vec<f64> = normals
        .par_iter()
        .map(|z| {
            let x = sd * z;
            let inner: f64 = levels
                .iter()
                .zip(probs)
                .map(|(h, p)| p * (tau * (sigma * h * x / t - 0.5 * sigma * sigma * h * h)).exp() * (p_tt * h - opt.strike))
                .sum();
            opt.curve.discount(t) * inner.max(0.0)
        })
        .collect();
    mean_se(&values)
}

fn binary_option(sigma: f64, strike: f64) -> OptionSpec {
    let payoff = DiscretePayoff::binary(0.2, 1.0, 0.85).unwrap();
    let spec = InformationProcessSpec::discrete(sigma, 3.0, payoff.clone()).unwrap();
    OptionSpec::new(strike, 1.0, payoff, spec, DiscountCurve::flat(0.04).unwrap()).unwrap()
}

/// Strike at fraction `f` of the attainable range `(P_tT h0, P_tT h1)`.
fn interior_strike(f: f64) -> f64 {
    let p = (-0.04f64 * 2.0).exp();
    p * (0.2 + f * 0.8)
}

#[test]
fn criterion_05_binary_call() {
    let mut c = Criterion::new(5, "binary_call", 60);
    let normals = normal_draws(5, 1_000_000);
    let mut worst_z: f64 = 0.0;
    for sigma in [0.2, 0.5, 1.0] {
        for f in [0.25, 0.5, 0.75] {
            let opt = binary_option(sigma, interior_strike(f));
            let closed = price_binary_call(&opt).unwrap();
            let (mc, se) = bridge_mc_call(&opt, &normals);
            worst_z = worst_z.max((closed - mc).abs() / se);
        }
    }
    c.below("grid_3x3_max_z", worst_z, 3.0);
    let mut worst_edge: f64 = 0.0;
    for sigma in [0.2, 0.5, 1.0] {
        let low = binary_option(sigma, interior_strike(-0.1));
        assert_eq!(low.strike_region(), StrikeRegion::AlwaysInTheMoney);
        let want = low.curve.discount(3.0) * low.payoff.mean() - low.curve.discount(1.0) * low.strike;
        worst_edge = worst_edge.max((price_binary_call(&low).unwrap() - want).abs());
        let high = binary_option(sigma, interior_strike(1.1));
        assert_eq!(high.strike_region(), StrikeRegion::NeverInTheMoney);
        worst_edge = worst_edge.max(price_binary_call(&high).unwrap().abs());
    }
    c.below("analytic_cases_abs_err", worst_edge, 1e-14);
    c.finish();
}

#[test]
fn criterion_06_greeks() {
    let mut c = Criterion::new(6, "greeks", 1);
    let (mut worst_vega, mut worst_delta): (f64, f64) = (0.0, 0.0);
    let mut min_vega = f64::INFINITY;
    let mut compared = 0;
    for i in 0..10 {
        let sigma = 0.3 + 0.2 * i as f64;
        for j in 1..10 {
            let opt = binary_option(sigma, interior_strike(j as f64 / 10.0));
            let g = greeks(&opt).unwrap();
            let price = price_binary_call(&opt).unwrap();
            min_vega = min_vega.min(g.vega);
            let b0 = opt.bond_price();
            let hb = 1e-6 * b0;
            let fd_delta = (binary_call_from_bond_price(&opt, b0 + hb).unwrap()
                - binary_call_from_bond_price(&opt, b0 - hb).unwrap())
                / (2.0 * hb);
            worst_delta = worst_delta.max(rel(g.delta, fd_delta));
            // a difference quotient of the price cannot resolve a vega below its rounding noise
            if g.vega < 1e-5 * price {
                continue;
            }
            compared += 1;
            let h = 1e-4 * sigma;
            let fd_vega = (price_binary_call(&binary_option(sigma + h, opt.strike)).unwrap()
                - price_binary_call(&binary_option(sigma - h, opt.strike)).unwrap())
                / (2.0 * h);
            worst_vega = worst_vega.max(rel(g.vega, fd_vega));
        }
    }
    c.holds("vega_points_compared", compared >= 60, format!("{compared} of 90"));
    c.below("vega_rel_err", worst_vega, 1e-5);
    c.below("delta_rel_err", worst_delta, 1e-5);
    c.holds("vega_positive", min_vega > 0.0, format!("min={min_vega:.3e}"));
    c.finish();
}

#[test]
fn criterion_07_arrow_debreu() {
    let mut c = Criterion::new(7, "arrow_debreu", 10);
    let curve = DiscountCurve::flat(0.05).unwrap();
    let payoff = DiscretePayoff::new(vec![0.0, 0.5, 1.0], vec![0.1, 0.2, 0.7]).unwrap();
    let specs = [
        InformationProcessSpec::discrete(0.3, 5.0, payoff.clone()).unwrap(),
        InformationProcessSpec::discrete(2.0, 5.0, payoff.clone()).unwrap(),
        InformationProcessSpec::continuous(0.4, 3.0, ContinuousDensity::exponential(1.2).unwrap()).unwrap(),
        InformationProcessSpec::continuous(0.4, 3.0, ContinuousDensity::gamma(2.0, 3).unwrap()).unwrap(),
    ];
    let mut worst_mass: f64 = 0.0;
    for spec in &specs {
        for t in [0.5, 1.5, 2.5] {
            let ad = ad_density(spec, &curve, t).unwrap();
            let mass = price_info_derivative(&ad, &PayoffFunction::new(|_| 1.0)).unwrap();
            worst_mass = worst_mass.max((mass - curve.discount(t)).abs());
        }
    }
    c.below("mass_abs_err", worst_mass, 1e-10);

    let mut worst_call: f64 = 0.0;
    for sigma in [0.2, 0.5, 1.0] {
        for f in [0.25, 0.5, 0.75] {
            let opt = binary_option(sigma, interior_strike(f));
            let ad = ad_density(&opt.spec, &opt.curve, opt.expiry).unwrap();
            let via_ad = price_info_derivative(&ad, &bond_call_payoff(&opt).unwrap()).unwrap();
            worst_call = worst_call.max(rel(via_ad, price_binary_call(&opt).unwrap()));
        }
    }
    c.below("call_rel_err", worst_call, 1e-8);

    // marginalizing the joint density over either argument
    let spec = InformationProcessSpec::discrete(0.6, 4.0, payoff.clone()).unwrap();
    let (t1, t2, big_t) = (1.0, 2.5, 4.0);
    let joint = bivariate_ad_density(&spec, &payoff, t1, t2).unwrap();
    let sd1 = joint.conditional_var().sqrt();
    let s2 = (t2 * (big_t - t2) / big_t).sqrt();
    let mut worst_marginal: f64 = 0.0;
    for x2 in [-1.0, 0.0, 0.4, 0.9, 1.5, 2.5] {
        let centre = t1 / t2 * x2;
        let integral = simpson(|x1| joint.eval(x1, x2), centre - 14.0 * sd1, centre + 14.0 * sd1, 4000);
        worst_marginal = worst_marginal.max((integral - joint.marginal(x2)).abs());
    }
    let first = |x1: f64| {
        let v = t1 * (big_t - t1) / big_t;
        payoff
            .levels()
            .iter()
            .zip(payoff.probs())
            .map(|(h, p)| p * (-(x1 - 0.6 * h * t1).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
            .sum::<f64>()
    };
    let (lo, hi) = (-14.0 * s2, 0.6 * t2 + 14.0 * s2);
    for x1 in [-0.8, 0.0, 0.3, 0.6, 1.2] {
        let integral = simpson(|x2| joint.eval(x1, x2), lo, hi, 40_000);
        worst_marginal = worst_marginal.max((integral - first(x1)).abs());
    }
    let total = joint.expect(|_, _| 1.0).unwrap();
    worst_marginal = worst_marginal.max((total - 1.0).abs());
    c.below("bivariate_marginal_abs_err", worst_marginal, 1e-9);
    c.finish();
}

/// Posterior-mean price by brute-force Simpson on the positive half-line.
fn dividend_oracle(asset: &SingleDividendAsset, t: f64, xi: f64) -> f64 {
    let big_t = asset.maturity;
    let a = asset.sigma * asset.sigma * t * big_t / (big_t - t);
    let b = asset.sigma * big_t * xi / (big_t - t);
    let log_w = |x: f64| asset.prior.ln_pdf(x) - 0.5 * a * x * x + b * x;
    let upper = 80.0;
    let n = 200_000;
    let peak = (0..=n).map(|i| log_w(upper * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
    let w = |x: f64| (log_w(x) - peak).exp();
    let z = simpson(w, 0.0, upper, n);
    let m = simpson(|x| x * w(x), 0.0, upper, n);
    asset.curve.forward_discount(t, big_t) * m / z
}

#[test]
fn criterion_08_continuous_closed_forms() {
    let mut c = Criterion::new(8, "continuous_closed_forms", 30);
    let curve = DiscountCurve::flat(0.03).unwrap();
    let big_t = 2.0;
    let mut priors = vec![ContinuousDensity::exponential(1.5).unwrap()];
    priors.extend((1..=6).map(|n| ContinuousDensity::gamma(2.0, n).unwrap()));
    let (mut vs_quad, mut vs_oracle): (f64, f64) = (0.0, 0.0);
    for prior in &priors {
        for sigma in [0.3, 1.0, 2.0] {
            let asset = SingleDividendAsset::new(prior.clone(), sigma, big_t, curve.clone()).unwrap();
            for t in [0.4, 1.0, 1.6] {
                for xi in [-0.5, 0.3, 1.5] {
                    let closed = match prior {
                        ContinuousDensity::Exponential { .. } => price_exponential_closed(&asset, t, xi).unwrap(),
                        _ => price_gamma_closed(&asset, t, xi).unwrap(),
                    };
                    vs_quad = vs_quad.max(rel(closed, price_single_dividend_quadrature(&asset, t, xi).unwrap()));
                    vs_oracle = vs_oracle.max(rel(closed, dividend_oracle(&asset, t, xi)));
                }
            }
        }
    }
    c.below("closed_vs_quadrature_rel_err", vs_quad, 1e-8);
    c.below("closed_vs_simpson_rel_err", vs_oracle, 1e-8);

    let mut recursion: f64 = 0.0;
    let mut vs_integral: f64 = 0.0;
    for x in [-3.0, -1.0, 0.0, 0.5, 2.0, 5.0] {
        let f = f_table(x, 8);
        let g = (-0.5 * x * x).exp();
        for k in 1..8 {
            let want = k as f64 * f[k - 1] + x.powi(k as i32) * g;
            recursion = recursion.max(rel(f[k + 1], want));
        }
        if x > 0.0 {
            let scaled = f_table_scaled(x, 8);
            for k in 0..=8 {
                recursion = recursion.max(rel(scaled[k] * g, f[k]));
            }
        }
        for (k, fk) in f.iter().enumerate() {
            let q = simpson(|z| z.powi(k as i32) * (-0.5 * z * z).exp(), x, x.max(0.0) + 40.0, 40_000);
            vs_integral = vs_integral.max(rel(*fk, q));
        }
    }
    c.below("f_recursion_residual", recursion, 1e-12);
    c.below("f_vs_simpson_rel_err", vs_integral, 1e-9);

    let assets = [
        SingleDividendAsset::new(ContinuousDensity::exponential(1.0).unwrap(), 0.6, big_t, curve.clone()).unwrap(),
        SingleDividendAsset::new(ContinuousDensity::gamma(2.0, 3).unwrap(), 0.6, big_t, curve.clone()).unwrap(),
    ];
    let expiry = 1.0;
    let (mut vs_ad, mut worst_z): (f64, f64) = (0.0, 0.0);
    for (n, asset) in assets.iter().enumerate() {
        let p = curve.forward_discount(expiry, big_t);
        for strike in [0.6 * p * asset.prior.mean(), p * asset.prior.mean(), 1.5 * p * asset.prior.mean()] {
            let bridge = price_call_bridge_measure(asset, strike, expiry).unwrap();
            vs_ad = vs_ad.max(rel(price_continuous_call_via_ad(asset, strike, expiry).unwrap(), bridge));
            let draws = 200_000usize;
            let sd = (expiry * (big_t - expiry) / big_t).sqrt();
            let payoffs: Vec<f64> = (0..draws / 1000)
                .into_par_iter()
                .flat_map_iter(|chunk| {
                    let mut rng = ChaCha8Rng::seed_from_u64(80 + n as u64);
                    rng.set_stream(chunk as u64);
                    (0..1000)
                        .map(|_| {
                            let d: f64 = match asset.prior {
                                ContinuousDensity::Exponential { mean } => Exp::new(1.0 / mean).unwrap().sample(&mut rng),
                                ContinuousDensity::Gamma { rate, shape } => {
                                    Gamma::new(shape as f64, 1.0 / rate).unwrap().sample(&mut rng)
                                }
                                _ => unreachable!(),
                            };
                            let z: f64 = StandardNormal.sample(&mut rng);
                            let xi = asset.sigma * d * expiry + sd * z;
                            let s = price_single_dividend(asset, expiry, xi).unwrap();
                            curve.discount(expiry) * (s - strike).max(0.0)
                        })
                        .collect::<Vec<f64>>()
                })
                .collect();
            let (m, se) = mean_se(&payoffs);
            worst_z = worst_z.max((m - bridge).abs() / se);
        }
    }
    c.below("call_vs_ad_rel_err", vs_ad, 1e-8);
    c.below("call_vs_mc_max_z", worst_z, 3.0);
    c.finish();
}

#[test]
fn criterion_09_black_scholes_recovery() {
    let mut c = Criterion::new(9, "black_scholes_recovery", 30);
    let (s0, r, nu, big_t): (f64, f64, f64, f64) = (100.0, 0.04, 0.25, 4.0);
    let sigma = 1.0 / big_t.sqrt();
    let (mut price, mut vol): (f64, f64) = (0.0, 0.0);
    for t in [0.1, 0.5, 1.0, 2.0, 3.0, 3.9] {
        for xi in [-2.0, -0.5, 0.0, 0.7, 2.5] {
            let want = s0 * (r * t + nu * xi - 0.5 * nu * nu * t).exp();
            price = price.max(rel(bs_recovery_price(s0, r, nu, big_t, sigma, t, xi).unwrap(), want));
        }
        vol = vol.max((bs_recovery_vol(nu, big_t, sigma, t) - nu).abs());
    }
    c.below("price_rel_err", price, 1e-12);
    c.below("vol_abs_err", vol, 1e-14);

    let spec = InformationProcessSpec::new(sigma, big_t, Factor::Continuous(ContinuousDensity::gaussian(0.0, 1.0).unwrap()))
        .unwrap();
    let times = vec![0.5, 1.0, 2.0, 3.0];
    let grid = TimeGrid::new([0.0].into_iter().chain(times.clone()).collect(), big_t).unwrap();
    let paths: Vec<Vec<f64>> = (0..100_000u64)
        .into_par_iter()
        .map(|i| information_path_at(&spec, &grid, 9, i).unwrap().values[1..].to_vec())
        .collect();
    let mut worst_z: f64 = 0.0;
    for a in 0..times.len() {
        for b in a..times.len() {
            let products: Vec<f64> = paths.iter().map(|p| p[a] * p[b]).collect();
            let (m, se) = mean_se(&products);
            worst_z = worst_z.max((m - times[a]).abs() / se);
        }
    }
    c.below("covariance_max_z", worst_z, 3.0);
    c.finish();
}

/// Expected discounted cash flows by enumerating every outcome of binary factors.
fn enumerate(
    posteriors: &[f64],
    flows: &[(f64, Box<dyn Fn(&[bool]) -> f64>)],
    t: f64,
    curve: &DiscountCurve,
) -> f64 {
    let m = posteriors.len();
    let mut total = 0.0;
    for bits in 0..1usize << m {
        let x: Vec<bool> = (0..m).map(|k| bits >> k & 1 == 1).collect();
        let prob: f64 = x.iter().zip(posteriors).map(|(on, p)| if *on { *p } else { 1.0 - p }).product();
        if prob == 0.0 {
            continue;
        }
        for (date, cash) in flows {
            if *date > t {
                total += prob * curve.forward_discount(t, *date) * cash(&x);
            }
        }
    }
    total
}

/// `Q(X = 1 | xi)` for a binary factor revealed at `date`.
fn posterior_one(p_one: f64, sigma: f64, date: f64, t: f64, xi: f64) -> f64 {
    if t == 0.0 {
        return p_one;
    }
    bayes(&[0.0, 1.0], &[1.0 - p_one, p_one], sigma, date, t, xi)[1]
}

#[test]
fn criterion_10_xfactor_engine() {
    let mut c = Criterion::new(10, "xfactor_engine", 10);
    let curve = DiscountCurve::flat(0.04).unwrap();
    let t = 0.5;

    let bond = CouponBond {
        coupon: 0.06,
        principal: 1.0,
        dates: vec![1.0, 2.0, 3.0],
        recovery: vec![0.4, 0.35, 0.3],
        default_probs: vec![0.05, 0.07, 0.1],
        sigmas: vec![0.3, 0.5, 0.8],
    };
    let xis = [0.1, -0.2, 0.3];
    let mut scenario = MarketScenario::new(t);
    for (k, xi) in xis.iter().enumerate() {
        scenario = scenario.with(&CouponBond::factor_id(k), *xi);
    }
    let post: Vec<f64> =
        (0..3).map(|k| posterior_one(1.0 - bond.default_probs[k], bond.sigmas[k], bond.dates[k], t, xis[k])).collect();
    let owed = bond.coupon + bond.principal;
    let flows: Vec<(f64, Box<dyn Fn(&[bool]) -> f64>)> = (0..3)
        .map(|k| {
            let (c_k, r_k) = (if k == 2 { owed } else { bond.coupon }, bond.recovery[k]);
            let f: Box<dyn Fn(&[bool]) -> f64> = Box::new(move |x: &[bool]| {
                let alive = x[..k].iter().all(|b| *b);
                match (alive, x[k]) {
                    (true, true) => c_k,
                    (true, false) => r_k * owed,
                    _ => 0.0,
                }
            });
            (bond.dates[k], f)
        })
        .collect();
    let coupon_err = (price_coupon_bond(&bond, &scenario, &curve).unwrap() - enumerate(&post, &flows, t, &curve)).abs();
    c.below("coupon_bond_abs_err", coupon_err, 1e-13);

    let (g, n) = (0.05, 0.6);
    let cds = CreditDefaultSwap {
        premium: g,
        protection: n,
        reference: [XFactor::binary("R1", 1.0, 0.4, 0.95).unwrap(), XFactor::binary("R2", 2.0, 0.7, 0.9).unwrap()],
    };
    let scen = MarketScenario::new(t).with("R1", 0.2).with("R2", -0.1);
    let post = [posterior_one(0.95, 0.4, 1.0, t, 0.2), posterior_one(0.9, 0.7, 2.0, t, -0.1)];
    let flows: Vec<(f64, Box<dyn Fn(&[bool]) -> f64>)> = vec![
        (1.0, Box::new(move |x: &[bool]| if x[0] { g } else { -n })),
        (2.0, Box::new(move |x: &[bool]| if x[0] { if x[1] { g } else { -n } } else { 0.0 })),
    ];
    let cds_err = (price_cds(&cds, &scen, &curve).unwrap() - enumerate(&post, &flows, t, &curve)).abs();
    c.below("cds_abs_err", cds_err, 1e-13);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut basket_err: f64 = 0.0;
    for bonds in 1..=3usize {
        let nodes = (1 << bonds) - 1;
        let basket = Basket {
            maturities: (1..=bonds).map(|d| d as f64).collect(),
            probs: (0..nodes).map(|_| rng.random_range(0.5..0.99)).collect(),
            sigmas: (0..nodes).map(|_| rng.random_range(0.1..1.0)).collect(),
        };
        let xi: Vec<f64> = (0..nodes).map(|_| rng.random_range(-0.3..0.5)).collect();
        let mut scen = MarketScenario::new(t);
        let mut post = Vec::new();
        for k in 1..=nodes {
            scen = scen.with(&Basket::node_id(k), xi[k - 1]);
            let date = basket.maturities[k.ilog2() as usize];
            post.push(posterior_one(basket.probs[k - 1], basket.sigmas[k - 1], date, t, xi[k - 1]));
        }
        // bond d pays the factor of the node reached after d moves down the tree
        let flows: Vec<(f64, Box<dyn Fn(&[bool]) -> f64>)> = (0..bonds)
            .map(|d| {
                let f: Box<dyn Fn(&[bool]) -> f64> = Box::new(move |x: &[bool]| {
                    let mut node = 1;
                    for _ in 0..d {
                        node = if x[node - 1] { 2 * node } else { 2 * node + 1 };
                    }
                    f64::from(u8::from(x[node - 1]))
                });
                (basket.maturities[d], f)
            })
            .collect();
        let got = price_basket(&basket, &scen, &curve).unwrap().total;
        basket_err = basket_err.max((got - enumerate(&post, &flows, t, &curve)).abs());
    }
    c.below("basket_abs_err", basket_err, 1e-13);

    let hb = HomogeneousBasket {
        maturity: 3.0,
        probs: vec![0.1, 0.3, 0.4, 0.5, 0.6],
        sigmas: vec![0.2, 0.4, 0.6, 0.8, 1.0],
    };
    let xi = [0.05, 0.2, -0.1, 0.4, 0.3];
    let mut scen = MarketScenario::new(t);
    for (j, v) in xi.iter().enumerate() {
        scen = scen.with(&HomogeneousBasket::factor_id(j), *v);
    }
    let post: Vec<f64> = (0..5).map(|j| posterior_one(hb.probs[j], hb.sigmas[j], hb.maturity, t, xi[j])).collect();
    let flows: Vec<(f64, Box<dyn Fn(&[bool]) -> f64>)> = vec![(
        hb.maturity,
        Box::new(|x: &[bool]| {
            let mut chain = 1.0;
            let mut value = x.len() as f64;
            for z in x {
                chain *= f64::from(u8::from(*z));
                value -= chain;
            }
            value
        }),
    )];
    let hb_err = (homogeneous_basket_value(&hb, &scen, &curve).unwrap() - enumerate(&post, &flows, t, &curve)).abs();
    c.below("homogeneous_basket_abs_err", hb_err, 1e-13);

    let graph = CashFlowGraph::new(
        vec![XFactor::binary("X1", 1.0, 0.5, 0.9).unwrap(), XFactor::binary("X2", 2.0, 0.8, 0.85).unwrap()],
        vec![
            CashFlow { date: 1.0, payout: Expr::scale(0.05, Expr::factor("X1")) },
            CashFlow {
                date: 2.0,
                payout: Expr::sum(vec![
                    Expr::scale(1.05, Expr::product(vec![Expr::factor("X1"), Expr::factor("X2")])),
                    Expr::scale(0.4, Expr::product(vec![Expr::factor("X1"), Expr::complement("X2")])),
                ]),
            },
        ],
    )
    .unwrap();
    let base = [("X1", 0.2), ("X2", 0.1)];
    let scen_with = |id: &str, bump: f64| {
        base.iter().fold(MarketScenario::new(t), |s, (k, v)| s.with(k, if *k == id { v + bump } else { *v }))
    };
    let vv = volatility_vector(&graph, &scen_with("", 0.0), &curve).unwrap();
    let mut vol_err: f64 = 0.0;
    for (id, _) in base {
        let h = 1e-5;
        let up = price_asset(&graph, &scen_with(id, h), &curve).unwrap();
        let down = price_asset(&graph, &scen_with(id, -h), &curve).unwrap();
        vol_err = vol_err.max(rel(vv.per_factor[id], (up - down) / (2.0 * h)));
    }
    c.below("volatility_vector_rel_err", vol_err, 1e-5);
    c.finish();
}

/// Reference reduction expressions, laid out as typeset LaTeX.
const REFERENCE_REDUCTIONS: [&str; 5] = [
    r"Z_1=z_1 X_1+\bar{z}_1\bar{X}_1",
    r"Z_2=X_1(z_2 X_2+\bar{z}_2\bar{X}_2)+\bar{X}_1(z_2
X_3+\bar{z}_2\bar{X}_3)",
    r"  Z_3 &=& X_1 X_2(z_3 X_4+\bar{z}_3\bar{X}_4)+X_1\bar{X}_2(z_3 X_5+\bar{z}_3\bar{X}_5)  \nn\\
      &+& \bar{X}_1 X_3(z_3 X_6+\bar{z}_3\bar{X}_6)+\bar{X}_1\bar{X}_3(z_3X_7+\bar{z}_3\bar{X}_7)",
    r"  Z_4 &=& X_1 X_2 X_4(z_4 X_8+\bar{z}_4\bar{X}_8)+X_1 X_2 \bar{X}_4(z_4 X_9+\bar{z}_4\bar{X}_9)  \nn\\
      &+& X_1 \bar{X}_2 X_5(z_4 X_{10}+\bar{z}_4\bar{X}_{10})+X_1 \bar{X}_2 \bar{X}_5(z_4 X_{11}+\bar{z}_4\bar{X}_{11}) \nn\\
      &+& \bar{X}_1 X_3 X_6(z_4 X_{12}+\bar{z}_4\bar{X}_{12})+\bar{X}_1 X_3 \bar{X}_6(z_4 X_{13}+\bar{z}_4\bar{X}_{13}) \nn\\
      &+& \bar{X}_1\bar{X}_3 X_7(z_4 X_{14}+\bar{z}_4\bar{X}_{14})+\bar{X}_1\bar{X}_3 \bar{X}_7(z_4 X_{15}+\bar{z}_4\bar{X}_{15})",
    r"  Z_5 &=& X_1 X_2 X_4X_8(z_5 X_{16}+\bar{z}_5\bar{X}_{16})+X_1 X_2 X_4\bar{X_8}(z_5 X_{17}+\bar{z}_5\bar{X}_{17})\nonumber\\
      &+& X_1 X_2 \bar{X}_4 X_9(z_5 X_{18}+\bar{z}_5\bar{X}_{18})+X_1 X_2 \bar{X}_4\bar{X}_9(z_5 X_{19}+\bar{z}_5\bar{X}_{19})\nonumber\\
      &+& X_1 \bar{X}_2 X_5X_{10}(z_5 X_{20}+\bar{z}_5\bar{X}_{20})+X_1 \bar{X}_2 X_5\bar{X}_{10}(z_5 X_{21}+\bar{z}_5\bar{X}_{21})\nonumber\\
      &+& X_1 \bar{X}_2\bar{X}_5 X_{11}(z_5 X_{22}+\bar{z}_5\bar{X}_{22})+X_1 \bar{X}_2\bar{X}_5\bar{X}_{11}(z_5 X_{23}+\bar{z}_5\bar{X}_{23})\nonumber\\
      &+& \bar{X}_1 X_3 X_6 X_{12}(z_5 X_{24}+\bar{z}_5\bar{X}_{24})+\bar{X}_1 X_3 X_6\bar{X}_{12}(z_5 X_{25}+\bar{z}_5\bar{X}_{25})\nonumber\\
      &+& \bar{X}_1 X_3\bar{X}_6 X_{13}(z_5 X_{26}+\bar{z}_5\bar{X}_{26})+\bar{X}_1 X_3\bar{X}_6\bar{X}_{13}(z_5 X_{27}+\bar{z}_5\bar{X}_{27})\nonumber\\
      &+& \bar{X}_1\bar{X}_3 X_7 X_{14}(z_5 X_{28}+\bar{z}_5\bar{X}_{28})+\bar{X}_1\bar{X}_3 X_7\bar{X}_{14}(z_5 X_{29}+\bar{z}_5\bar{X}_{29})\nonumber\\
      &+& \bar{X}_1\bar{X}_3\bar{X}_7 X_{15}(z_5 X_{30}+\bar{z}_5\bar{X}_{30})+\bar{X}_1\bar{X}_3\bar{X}_7\bar{X}_{15}(z_5 X_{31}+\bar{z}_5\bar{X}_{31})",
];

/// Strips layout so two renderings of the same expression compare equal.
fn canonical(latex: &str) -> String {
    let mut s = latex.replace(r"\nonumber", "").replace(r"\nn", "").replace(r"\\", "").replace('&', "");
    // `\bar{X_8}` and `\bar{X}_8` typeset identically
    while let Some(i) = s.find(r"\bar{X_") {
        let close = i + s[i..].find('}').unwrap();
        let digits = s[i + 7..close].to_string();
        s.replace_range(i..=close, &format!(r"\bar{{X}}_{digits}"));
    }
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn random_joint(rng: &mut ChaCha8Rng, n: usize) -> JointDistribution {
    let w: Vec<f64> = (0..1 << n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    JointDistribution::new(n, w.iter().map(|x| x / total).collect()).unwrap()
}

#[test]
fn criterion_11_zfactor_reduction() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut c = Criterion::new(11, "zfactor_reduction", 60);
    let tree = build_reduction(5).unwrap();
    let mismatched: Vec<usize> = (1..=5)
        .filter(|&j| canonical(&tree.latex(j).unwrap()) != canonical(REFERENCE_REDUCTIONS[j - 1]))
        .collect();
    c.holds("expressions_n_le_5", mismatched.is_empty(), format!("mismatched {mismatched:?}"));
    let mut same_prefix = true;
    for n in 1..5 {
        let small = build_reduction(n).unwrap();
        same_prefix &= (1..=n).all(|j| small.latex(j).unwrap() == tree.latex(j).unwrap());
    }
    c.holds("smaller_trees_agree", same_prefix, "n<5 share Z_j".into());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for n in [2, 3, 4] {
        let tree = build_reduction(n).unwrap();
        for _ in 0..1000 {
            let joint = random_joint(&mut rng, n);
            let back = joint_from_x_probs(&tree, &x_probs_from_joint(&joint).unwrap()).unwrap();
            for (a, b) in joint.probs.iter().zip(&back.probs) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    c.below("round_trip_abs_err", worst, 1e-13);

    let mut min_p: f64 = 1.0;
    for n in [3, 4] {
        let tree = build_reduction(n).unwrap();
        let joint = random_joint(&mut rng, n);
        let samples = 1_000_000u64;
        let counts = sample_pattern_counts(&tree, &x_probs_from_joint(&joint).unwrap(), samples, 11 + n as u64).unwrap();
        let stat: f64 = counts
            .iter()
            .zip(&joint.probs)
            .map(|(o, p)| {
                let e = p * samples as f64;
                (*o as f64 - e).powi(2) / e
            })
            .sum();
        let df = ((1 << n) - 1) as f64;
        min_p = min_p.min(ChiSquared::new(df).unwrap().sf(stat));
    }
    c.holds("chi_square", min_p > 0.001, format!("min p={min_p:.4}"));
    c.finish();
}

#[test]
fn criterion_12_discrete_time_rates() {
    let mut c = Criterion::new(12, "discrete_time_rates_depth_20", 5);
    let depth = 20;
    let spec = RationalModelSpec {
        alpha: (0..=depth).map(|i| 0.6 * 0.96f64.powi(i)).collect(),
        beta: (0..=depth).map(|i| 0.4 * 0.92f64.powi(i)).collect(),
        n0: 1.0,
        up: 1.2,
        down: 0.85,
        dates: None,
    };
    let model = spec.model().unwrap();
    let tree = &model.tree;
    let n = spec.martingale(tree);
    let b = money_market(&model);
    let (mut closed, mut mm): (f64, f64) = (0.0, 0.0);
    for j in 0..=depth as usize {
        let p = model.bond_prices(j).unwrap();
        for k in 1..p.len() {
            let i = ScenarioTree::level(k);
            closed = closed.max(rel(p[k], spec.bond_price(i, j, n[k])));
        }
        if j >= 1 {
            for k in ScenarioTree::nodes(j) {
                mm = mm.max(rel(p[k / 2], b[k / 2] / b[k]));
            }
        }
    }
    c.below("closed_form_rel_err", closed, 1e-14);
    c.below("one_period_bond_vs_money_market", mm, 1e-14);

    let rho: Vec<f64> = (0..tree.len()).map(|k| model.kernel[k] * b[k]).collect();
    let scale = rho[1..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    c.below("rho_martingale_rel", tree.martingale_residual(&rho) / scale, 1e-14);

    let d = doob_decomposition(&model);
    let mut doob: f64 = 0.0;
    for k in 1..tree.len() {
        doob = doob.max(rel(model.kernel[k], d.martingale[k] - d.compensator[k]));
        doob = doob.max((d.compensator[k] - d.compensator_short_rate[k]).abs() / d.martingale[k]);
    }
    doob = doob.max(tree.martingale_residual(&d.martingale) / d.martingale[1]);
    c.below("doob_rel_err", doob, 1e-14);

    let fh = fh_representation(&model);
    let mut fh_err: f64 = 0.0;
    fh.bond_prices(tree, |j, p| {
        for k in 1..p.len() {
            fh_err = fh_err.max((p[k] - spec.bond_price(ScenarioTree::level(k), j, n[k])).abs());
        }
    });
    c.below("fh_matrix_abs_err", fh_err, 1e-12);
    c.finish();
}

#[test]
fn criterion_13_inflation() {
    let mut c = Criterion::new(13, "inflation", 1);
    let depth = 8;
    let tree = ScenarioTree::binomial(depth, 0.45).unwrap();
    let dates: Vec<f64> = (0..=depth).map(|i| 0.5 * i as f64).collect();
    let ups = |k: usize| ScenarioTree::up_moves(k) as i32;
    let consumption = tree.process(|l, k| 1.02f64.powi(l as i32) * 1.03f64.powi(ups(k)) * 0.98f64.powi(l as i32 - ups(k)));
    let money = tree.process(|l, k| 1.01f64.powi(l as i32) * 1.05f64.powi(ups(k)) * 0.99f64.powi(l as i32 - ups(k)));
    let liquidity = tree.process(|l, k| 0.05 + 0.002 * l as f64 + 0.001 * ups(k) as f64);
    let prefs = Preferences { a: 1.0, b: 0.3, gamma: 0.04, mu: 1.7 };
    let model = InflationModel::new(tree.clone(), dates.clone(), consumption.clone(), money.clone(), liquidity, prefs).unwrap();
    let mut velocity: f64 = 0.0;
    for k in 1..tree.len() {
        velocity = velocity.max(rel(model.price_level[k] * consumption[k] / money[k], prefs.a / prefs.b * model.liquidity[k]));
    }
    c.below("velocity_rel_err", velocity, 1e-15);

    // with lambda M constant the nominal kernel is deterministic
    let flat_lm = tree.process(|_, k| 0.07 / money[k]);
    let flat = InflationModel::new(tree.clone(), dates.clone(), consumption, money, flat_lm, prefs).unwrap();
    let payoff = tree.process(|l, k| 1.0 + 0.1 * ups(k) as f64 - 0.03 * l as f64);
    let mut claim: f64 = 0.0;
    for j in 1..=depth {
        let expected: f64 = ScenarioTree::nodes(j).map(|k| tree.path_prob(k) * payoff[k]).sum();
        let v = flat.claim_value(j, &payoff).unwrap()[1];
        claim = claim.max(rel(v, (-prefs.gamma * dates[j]).exp() * expected));
    }
    c.below("constant_liquidity_claim_rel_err", claim, 1e-13);

    let mut linked: f64 = 0.0;
    for j in 1..=depth {
        let nominal = model.index_linked_bond(j).unwrap();
        let real = model.real_bond(j).unwrap();
        for k in 1..nominal.len() {
            linked = linked.max(rel(nominal[k], model.price_level[k] * real[k]));
        }
    }
    c.below("index_linked_rel_err", linked, 1e-13);
    c.finish();
}

fn read_dir_sorted(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn criterion_14_simulation_regimes() {
    let mut c = Criterion::new(14, "simulation_regimes", 120);
    let runs: Vec<(i32, BTreeMap<String, Vec<u8>>)> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().to_str().unwrap().to_string();
            let code = infoflow::cli::run_with(["infoflow", "simulate", "--seed", "2024", "--out", &out, "--verify"]);
            (code, read_dir_sorted(dir.path()))
        })
        .collect();
    c.holds("exit_codes", runs.iter().all(|r| r.0 == 0), format!("{:?}", runs.iter().map(|r| r.0).collect::<Vec<_>>()));
    let path_files = runs[0].1.keys().filter(|k| k.starts_with("bond_paths_sigma_")).count();
    c.holds("regimes", path_files == 12, format!("{path_files} path files"));
    c.holds("deterministic", runs[0].1 == runs[1].1, format!("{} files identical", runs[0].1.len()));
    c.finish();
}
